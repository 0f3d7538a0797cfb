#include "colgrid/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "colgrid/errors.hpp"

namespace colgrid {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatch(msg);
}

template <typename Params, typename Ref>
std::vector<Ref> refs_impl(Params& model) {
  std::vector<Ref> out;
  const auto linear = [&out](const char* base, auto& layer) {
    out.push_back({std::string(base) + ".W", &layer.W, nullptr});
    out.push_back({std::string(base) + ".b", nullptr, &layer.b});
  };
  linear("embed_spatial", model.embed_spatial);
  if (model.uses_ppcg()) linear("embed_ppcg", model.embed_ppcg);
  if (model.uses_vpcg()) linear("embed_vpcg", model.embed_vpcg);
  if (model.uses_social()) linear("embed_social", model.embed_social);
  out.push_back({"lstm.Wi", &model.lstm.Wi, nullptr});
  out.push_back({"lstm.bi", nullptr, &model.lstm.bi});
  out.push_back({"lstm.Wf", &model.lstm.Wf, nullptr});
  out.push_back({"lstm.bf", nullptr, &model.lstm.bf});
  out.push_back({"lstm.Wg", &model.lstm.Wg, nullptr});
  out.push_back({"lstm.bg", nullptr, &model.lstm.bg});
  out.push_back({"lstm.Wo", &model.lstm.Wo, nullptr});
  out.push_back({"lstm.bo", nullptr, &model.lstm.bo});
  linear("head", model.head);
  return out;
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::Vanilla: return "vanilla";
    case Variant::P: return "p";
    case Variant::V: return "v";
    case Variant::PV: return "pv";
    case Variant::Social: return "social";
    case Variant::SocialFiltered: return "social_filtered";
  }
  return "pv";
}

Variant variant_from_string(const std::string& name) {
  if (name == "vanilla") return Variant::Vanilla;
  if (name == "p") return Variant::P;
  if (name == "v") return Variant::V;
  if (name == "pv") return Variant::PV;
  if (name == "social") return Variant::Social;
  if (name == "social_filtered") return Variant::SocialFiltered;
  throw DataError(DataError::Kind::InvalidConfig,
                  "unknown variant '" + name +
                      "' (expected vanilla|p|v|pv|social|social_filtered)");
}

ModelParams init_model(Variant variant, const ModelDims& dims, Rng& rng) {
  if (dims.embed_dim < 1 || dims.hidden_dim < 1 || dims.n_sector < 1 ||
      dims.social.grid_cells < 1 || dims.social.neighborhood_m <= 0.0) {
    throw DataError(DataError::Kind::InvalidConfig, "model dimensions must be positive");
  }
  ModelParams model;
  model.variant = variant;
  model.dims = dims;
  model.embed_spatial = make_linear(dims.embed_dim, 2, rng);
  if (model.uses_ppcg()) model.embed_ppcg = make_linear(dims.embed_dim, dims.n_sector, rng);
  if (model.uses_vpcg()) model.embed_vpcg = make_linear(dims.embed_dim, dims.n_sector, rng);
  if (model.uses_social()) {
    model.embed_social = make_linear(dims.embed_dim, dims.social_pooled_dim(), rng);
  }
  model.lstm = make_lstm(model.input_dim(), dims.hidden_dim, rng);
  model.head = make_linear(5, dims.hidden_dim, rng);
  return model;
}

ModelParams allocate_model(Variant variant, const ModelDims& dims) {
  Rng throwaway(0u);
  return zeros_like(init_model(variant, dims, throwaway));
}

ModelParams zeros_like(const ModelParams& model) {
  ModelParams zero;
  zero.variant = model.variant;
  zero.dims = model.dims;
  zero.embed_spatial = zeros_like(model.embed_spatial);
  if (model.uses_ppcg()) zero.embed_ppcg = zeros_like(model.embed_ppcg);
  if (model.uses_vpcg()) zero.embed_vpcg = zeros_like(model.embed_vpcg);
  if (model.uses_social()) zero.embed_social = zeros_like(model.embed_social);
  zero.lstm = zeros_like(model.lstm);
  zero.head = zeros_like(model.head);
  return zero;
}

std::vector<TensorRef> tensor_refs(ModelParams& model) {
  return refs_impl<ModelParams, TensorRef>(model);
}

std::vector<ConstTensorRef> tensor_refs(const ModelParams& model) {
  return refs_impl<const ModelParams, ConstTensorRef>(model);
}

ModelState make_state(const ModelParams& model, int n_cols) {
  return ModelState{Mat::Zero(model.dims.hidden_dim, n_cols),
                    Mat::Zero(model.dims.hidden_dim, n_cols)};
}

void model_advance(const ModelParams& model, const StepInputs& inputs, ModelState& state,
                   StepCache* cache) {
  const int n = static_cast<int>(state.h.cols());
  const int embed = model.dims.embed_dim;
  require(inputs.spatial != nullptr && inputs.spatial->rows() == 2 &&
              inputs.spatial->cols() == n,
          "spatial input must be 2 x n_cols");

  Mat x(model.input_dim(), n);
  int row = 0;

  const Mat spatial_embed = affine_relu(model.embed_spatial, *inputs.spatial);
  x.middleRows(row, embed) = spatial_embed;
  row += embed;

  Mat ppcg_embed, vpcg_embed, pooled, social_embed;
  std::vector<std::vector<std::pair<int, int>>> pool_slots;
  if (model.uses_ppcg()) {
    require(inputs.ppcg != nullptr && inputs.ppcg->rows() == model.dims.n_sector &&
                inputs.ppcg->cols() == n,
            "pedestrian grid input must be n_sector x n_cols");
    ppcg_embed = affine_relu(model.embed_ppcg, *inputs.ppcg);
    x.middleRows(row, embed) = ppcg_embed;
    row += embed;
  }
  if (model.uses_vpcg()) {
    require(inputs.vpcg != nullptr && inputs.vpcg->rows() == model.dims.n_sector &&
                inputs.vpcg->cols() == n,
            "vehicle grid input must be n_sector x n_cols");
    vpcg_embed = affine_relu(model.embed_vpcg, *inputs.vpcg);
    x.middleRows(row, embed) = vpcg_embed;
    row += embed;
  }
  if (model.uses_social()) {
    require(inputs.positions != nullptr && inputs.positions->rows() == 2 &&
                inputs.positions->cols() == n,
            "social pooling needs 2 x n_cols positions");
    require(inputs.social_neighbors != nullptr &&
                static_cast<int>(inputs.social_neighbors->size()) == n,
            "social pooling needs one neighbor list per column");
    const int hidden = model.dims.hidden_dim;
    pooled = Mat::Zero(model.dims.social_pooled_dim(), n);
    pool_slots.resize(static_cast<std::size_t>(n));
    for (int col = 0; col < n; ++col) {
      const Vec2 center{(*inputs.positions)(0, col), (*inputs.positions)(1, col)};
      for (int nb : (*inputs.social_neighbors)[static_cast<std::size_t>(col)]) {
        const Vec2 at{(*inputs.positions)(0, nb), (*inputs.positions)(1, nb)};
        const std::optional<int> cell = social_cell_index(at - center, model.dims.social);
        if (!cell) continue;
        const int base = *cell * hidden;
        pooled.col(col).segment(base, hidden) += state.h.col(nb);
        pool_slots[static_cast<std::size_t>(col)].push_back({nb, base});
      }
    }
    social_embed = affine_relu(model.embed_social, pooled);
    x.middleRows(row, embed) = social_embed;
    row += embed;
  }

  if (cache != nullptr) {
    cache->spatial_in = *inputs.spatial;
    cache->spatial_embed = spatial_embed;
    if (model.uses_ppcg()) {
      cache->ppcg_in = *inputs.ppcg;
      cache->ppcg_embed = std::move(ppcg_embed);
    }
    if (model.uses_vpcg()) {
      cache->vpcg_in = *inputs.vpcg;
      cache->vpcg_embed = std::move(vpcg_embed);
    }
    if (model.uses_social()) {
      cache->social_pooled = std::move(pooled);
      cache->social_embed = std::move(social_embed);
      cache->pool_slots = std::move(pool_slots);
    }
  }
  lstm_step(model.lstm, x, state.h, state.c, cache != nullptr ? &cache->lstm : nullptr);
  if (cache != nullptr) cache->h_out = state.h;
}

Mat model_head_raw(const ModelParams& model, const Mat& h) {
  require(h.rows() == model.dims.hidden_dim, "hidden state height mismatch");
  return (model.head.W * h).colwise() + model.head.b;
}

namespace {

/// Realized target states of one window at one step: predicted positions
/// with velocity = realized displacement / dt.
std::vector<AgentState> realized_targets(const FeatureBatch& batch,
                                         std::span<const int> cols, const Mat& pos_t,
                                         const Mat& pos_prev, double dt) {
  std::vector<AgentState> out;
  out.reserve(cols.size());
  for (int col : cols) {
    AgentState state;
    state.agent_id = batch.ped_of_col[static_cast<std::size_t>(col)];
    state.kind = AgentKind::Pedestrian;
    state.position = {pos_t(0, col), pos_t(1, col)};
    state.velocity = {(pos_t(0, col) - pos_prev(0, col)) / dt,
                      (pos_t(1, col) - pos_prev(1, col)) / dt};
    out.push_back(state);
  }
  return out;
}

}  // namespace

double model_forward(const ModelParams& model, const FeatureBatch& batch,
                     ForwardCache* cache, const ForwardOptions& options,
                     std::span<const SceneWindow> windows) {
  const int steps = batch.steps();
  const int n = batch.cols();
  if (n == 0 || batch.n_windows == 0) {
    if (cache != nullptr) {
      cache->per_step.clear();
      cache->n_cols = 0;
    }
    return 0.0;
  }
  if ((model.uses_ppcg() || model.uses_vpcg()) &&
      static_cast<int>(batch.ppcg.empty() ? 0 : batch.ppcg[0].rows()) !=
          model.dims.n_sector) {
    throw ShapeMismatch("feature batch sector count does not match the model");
  }
  if (options.autoregressive) {
    if (static_cast<int>(windows.size()) != batch.n_windows) {
      throw DataError(DataError::Kind::InvalidConfig,
                      "autoregressive forward needs the source windows");
    }
    if (options.features.n_sector != model.dims.n_sector) {
      throw DataError(DataError::Kind::InvalidConfig,
                      "feature sector count does not match the model");
    }
  }

  if (cache != nullptr) {
    cache->per_step.assign(static_cast<std::size_t>(steps), StepCache{});
    cache->n_cols = n;
  }

  // Candidate pooling neighbors for the unfiltered social variant: every
  // other column of the same window, for every step.
  std::vector<std::vector<int>> window_neighbors;
  if (model.variant == Variant::Social) {
    window_neighbors.resize(static_cast<std::size_t>(n));
    for (int col = 0; col < n; ++col) {
      for (int other : batch.cols_of_window[static_cast<std::size_t>(
               batch.window_of_col[static_cast<std::size_t>(col)])]) {
        if (other != col) window_neighbors[static_cast<std::size_t>(col)].push_back(other);
      }
    }
  }

  // Realized positions per step: ground truth under teacher forcing; the
  // fed-back mean displacements (detached) once autoregressive mode passes
  // the observation horizon.
  std::vector<Mat> realized = batch.positions;
  std::vector<std::vector<Vec2>> heading_history;
  if (options.autoregressive) {
    heading_history.resize(static_cast<std::size_t>(n));
    for (int col = 0; col < n; ++col) {
      const SceneWindow& window =
          windows[static_cast<std::size_t>(batch.window_of_col[static_cast<std::size_t>(col)])];
      const std::int64_t id = batch.ped_of_col[static_cast<std::size_t>(col)];
      for (int t = 0; t < batch.t_obs; ++t) {
        const AgentState* state = window.find(t, id);
        require(state != nullptr, "target missing from an observation frame");
        heading_history[static_cast<std::size_t>(col)].push_back(state->velocity);
      }
    }
  }

  ModelState state = make_state(model, n);
  double loss_sum = 0.0;

  Mat ar_spatial, ar_ppcg, ar_vpcg;
  std::vector<std::vector<int>> ar_filtered;

  for (int t = 1; t <= steps - 2; ++t) {
    StepInputs inputs;
    const bool fed_back = options.autoregressive && t >= batch.t_obs;
    if (!fed_back) {
      inputs.spatial = &batch.spatial[static_cast<std::size_t>(t)];
      inputs.ppcg = &batch.ppcg[static_cast<std::size_t>(t)];
      inputs.vpcg = &batch.vpcg[static_cast<std::size_t>(t)];
      inputs.positions = &batch.positions[static_cast<std::size_t>(t)];
      if (model.variant == Variant::Social) {
        inputs.social_neighbors = &window_neighbors;
      } else if (model.variant == Variant::SocialFiltered) {
        inputs.social_neighbors = &batch.filtered_neighbors[static_cast<std::size_t>(t)];
      }
    } else {
      ar_spatial = realized[static_cast<std::size_t>(t)] -
                   realized[static_cast<std::size_t>(t - 1)];
      inputs.spatial = &ar_spatial;
      inputs.positions = &realized[static_cast<std::size_t>(t)];
      ar_ppcg = Mat::Zero(model.dims.n_sector, n);
      ar_vpcg = Mat::Zero(model.dims.n_sector, n);
      ar_filtered.assign(static_cast<std::size_t>(n), {});
      for (int w = 0; w < batch.n_windows; ++w) {
        const SceneWindow& window = windows[static_cast<std::size_t>(w)];
        const std::vector<int>& cols = batch.cols_of_window[static_cast<std::size_t>(w)];
        const std::vector<AgentState> targets = realized_targets(
            batch, cols, realized[static_cast<std::size_t>(t)],
            realized[static_cast<std::size_t>(t - 1)], batch.dt);

        std::vector<AgentState> other_peds;
        std::vector<AgentState> vehicles;
        for (const AgentState& agent :
             window.frames[static_cast<std::size_t>(t)].agents) {
          if (std::find(window.target_ids.begin(), window.target_ids.end(),
                        agent.agent_id) != window.target_ids.end()) {
            continue;
          }
          (agent.kind == AgentKind::Pedestrian ? other_peds : vehicles).push_back(agent);
        }

        for (std::size_t k = 0; k < cols.size(); ++k) {
          const int col = cols[k];
          const AgentState& target = targets[k];
          heading_history[static_cast<std::size_t>(col)].push_back(target.velocity);
          const std::optional<Vec2> heading = resolve_heading(
              heading_history[static_cast<std::size_t>(col)], options.features.heading_eps);

          std::vector<AgentState> peds = targets;
          peds.insert(peds.end(), other_peds.begin(), other_peds.end());
          const std::vector<InteractionRecord> ped_records =
              select_interacting(target, peds, options.features.ped_params);
          const std::vector<InteractionRecord> veh_records =
              select_interacting(target, vehicles, options.features.veh_params);
          const PolarCollisionGrid ppcg = build_grid(
              target, ped_records, options.features.ped_params, model.dims.n_sector, heading);
          const PolarCollisionGrid vpcg = build_grid(
              target, veh_records, options.features.veh_params, model.dims.n_sector, heading);
          for (int s = 0; s < model.dims.n_sector; ++s) {
            ar_ppcg(s, col) = ppcg.values[static_cast<std::size_t>(s)];
            ar_vpcg(s, col) = vpcg.values[static_cast<std::size_t>(s)];
          }

          if (model.variant == Variant::SocialFiltered) {
            for (const InteractionRecord& rec :
                 select_interacting(target, targets, options.features.ped_params)) {
              for (std::size_t j = 0; j < cols.size(); ++j) {
                if (batch.ped_of_col[static_cast<std::size_t>(cols[j])] ==
                    rec.neighbor_id) {
                  ar_filtered[static_cast<std::size_t>(col)].push_back(cols[j]);
                  break;
                }
              }
            }
          }
        }
      }
      inputs.ppcg = &ar_ppcg;
      inputs.vpcg = &ar_vpcg;
      if (model.variant == Variant::Social) {
        inputs.social_neighbors = &window_neighbors;
      } else if (model.variant == Variant::SocialFiltered) {
        inputs.social_neighbors = &ar_filtered;
      }
    }

    StepCache* step_cache =
        cache != nullptr ? &cache->per_step[static_cast<std::size_t>(t)] : nullptr;
    model_advance(model, inputs, state, step_cache);

    if (t < batch.t_obs - 1) continue;

    const Mat raw = model_head_raw(model, state.h);
    Mat d_raw;
    if (cache != nullptr) d_raw = Mat::Zero(5, n);
    for (int col = 0; col < n; ++col) {
      const Vec2 target{
          batch.positions[static_cast<std::size_t>(t + 1)](0, col) -
              realized[static_cast<std::size_t>(t)](0, col),
          batch.positions[static_cast<std::size_t>(t + 1)](1, col) -
              realized[static_cast<std::size_t>(t)](1, col)};
      loss_sum += gaussian_nll(gaussian_from_raw(raw.col(col)), target);
      if (cache != nullptr) {
        d_raw.col(col) =
            gaussian_nll_backward_raw(raw.col(col), target) / batch.n_windows;
      }
    }
    if (cache != nullptr) {
      cache->per_step[static_cast<std::size_t>(t)].d_raw = std::move(d_raw);
    }

    if (options.autoregressive && t + 1 < steps) {
      // Feed the mean displacement forward; the realized path is detached.
      realized[static_cast<std::size_t>(t + 1)] =
          realized[static_cast<std::size_t>(t)] + raw.topRows(2);
    }
  }

  if (!std::isfinite(loss_sum)) {
    throw NumericalError("training loss is not finite");
  }
  return loss_sum / batch.n_windows;
}

void model_backward(const ModelParams& model, const FeatureBatch& batch,
                    const ForwardCache& cache, ModelParams& grad) {
  const int steps = batch.steps();
  const int n = cache.n_cols;
  require(grad.variant == model.variant && grad.dims.hidden_dim == model.dims.hidden_dim,
          "gradient accumulator does not match the model");
  if (n == 0) return;
  require(static_cast<int>(cache.per_step.size()) == steps && n == batch.cols(),
          "backward requires the cache recorded by model_forward on this batch");

  const int embed = model.dims.embed_dim;
  const int hidden = model.dims.hidden_dim;
  Mat dh = Mat::Zero(hidden, n);
  Mat dc = Mat::Zero(hidden, n);

  for (int t = steps - 2; t >= 1; --t) {
    const StepCache& sc = cache.per_step[static_cast<std::size_t>(t)];
    if (sc.d_raw.size() > 0) {
      grad.head.W.noalias() += sc.d_raw * sc.h_out.transpose();
      grad.head.b += sc.d_raw.rowwise().sum();
      dh.noalias() += model.head.W.transpose() * sc.d_raw;
    }

    Mat dx, dh_prev, dc_prev;
    lstm_step_backward(model.lstm, sc.lstm, dh, dc, dx, dh_prev, dc_prev, grad.lstm);

    int row = 0;
    affine_relu_backward(model.embed_spatial, sc.spatial_in, sc.spatial_embed,
                         dx.middleRows(row, embed), grad.embed_spatial);
    row += embed;
    if (model.uses_ppcg()) {
      affine_relu_backward(model.embed_ppcg, sc.ppcg_in, sc.ppcg_embed,
                           dx.middleRows(row, embed), grad.embed_ppcg);
      row += embed;
    }
    if (model.uses_vpcg()) {
      affine_relu_backward(model.embed_vpcg, sc.vpcg_in, sc.vpcg_embed,
                           dx.middleRows(row, embed), grad.embed_vpcg);
      row += embed;
    }
    if (model.uses_social()) {
      const Mat d_pooled =
          affine_relu_backward(model.embed_social, sc.social_pooled, sc.social_embed,
                               dx.middleRows(row, embed), grad.embed_social);
      row += embed;
      // The pooled tensor was built from the previous hidden state, so its
      // gradient scatters back across columns into dh_prev.
      for (int col = 0; col < n; ++col) {
        for (const auto& [nb, base] : sc.pool_slots[static_cast<std::size_t>(col)]) {
          dh_prev.col(nb) += d_pooled.col(col).segment(base, hidden);
        }
      }
    }

    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
}

}  // namespace colgrid
