#include "colgrid/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "colgrid/errors.hpp"
#include "colgrid/format.hpp"
#include "colgrid/rng.hpp"

namespace colgrid {

namespace {

bool is_target(const SceneWindow& window, std::int64_t agent_id) {
  return std::find(window.target_ids.begin(), window.target_ids.end(), agent_id) !=
         window.target_ids.end();
}

}  // namespace

std::vector<Vec2> extrapolate_vehicle(const AgentState& state, int steps, double dt) {
  if (steps < 1) throw ShapeMismatch("extrapolation needs at least one step");
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int s = 1; s <= steps; ++s) {
    out.push_back(state.position + state.velocity * (static_cast<double>(s) * dt));
  }
  return out;
}

RolloutResult rollout(const SceneWindow& window, const ModelParams& model, int k,
                      std::uint64_t seed, const RolloutOptions& options) {
  if (k < 1) {
    throw DataError(DataError::Kind::InvalidConfig, "sample count must be at least 1");
  }
  if (options.features.n_sector != model.dims.n_sector) {
    throw DataError(DataError::Kind::InvalidConfig,
                    "feature sector count does not match the model");
  }

  const FeatureBatch batch =
      build_feature_batch(std::span<const SceneWindow>(&window, 1), options.features);
  const int n_targets = batch.cols();

  RolloutResult result;
  result.pedestrian_ids = batch.ped_of_col;
  result.samples.assign(static_cast<std::size_t>(k),
                        std::vector<std::vector<Vec2>>(static_cast<std::size_t>(n_targets)));
  if (n_targets == 0) return result;

  const int t_obs = window.t_obs;
  const int t_pred = window.t_pred;
  const double dt = window.dt;
  const int hidden_cols = k * n_targets;  // column = sample * n_targets + target

  // Warm up once on ground-truth inputs; every sample shares this state.
  ModelState warm = make_state(model, n_targets);
  std::vector<std::vector<int>> warm_neighbors;
  if (model.variant == Variant::Social) {
    warm_neighbors.resize(static_cast<std::size_t>(n_targets));
    for (int j = 0; j < n_targets; ++j) {
      for (int o = 0; o < n_targets; ++o) {
        if (o != j) warm_neighbors[static_cast<std::size_t>(j)].push_back(o);
      }
    }
  }
  for (int t = 1; t <= t_obs - 1; ++t) {
    StepInputs inputs;
    inputs.spatial = &batch.spatial[static_cast<std::size_t>(t)];
    inputs.ppcg = &batch.ppcg[static_cast<std::size_t>(t)];
    inputs.vpcg = &batch.vpcg[static_cast<std::size_t>(t)];
    inputs.positions = &batch.positions[static_cast<std::size_t>(t)];
    if (model.variant == Variant::Social) {
      inputs.social_neighbors = &warm_neighbors;
    } else if (model.variant == Variant::SocialFiltered) {
      inputs.social_neighbors = &batch.filtered_neighbors[static_cast<std::size_t>(t)];
    }
    model_advance(model, inputs, warm);
  }

  ModelState state = make_state(model, hidden_cols);
  Mat cur(2, hidden_cols);
  for (int rep = 0; rep < k; ++rep) {
    state.h.middleCols(rep * n_targets, n_targets) = warm.h;
    state.c.middleCols(rep * n_targets, n_targets) = warm.c;
    cur.middleCols(rep * n_targets, n_targets) =
        batch.positions[static_cast<std::size_t>(t_obs - 1)];
  }

  std::vector<std::vector<int>> social_neighbors;
  if (model.uses_social()) {
    social_neighbors.resize(static_cast<std::size_t>(hidden_cols));
    for (int rep = 0; rep < k; ++rep) {
      for (int j = 0; j < n_targets; ++j) {
        for (int o = 0; o < n_targets; ++o) {
          if (o != j) {
            social_neighbors[static_cast<std::size_t>(rep * n_targets + j)].push_back(
                rep * n_targets + o);
          }
        }
      }
    }
  }

  // Ground-truth velocity history seeds the heading fallback per column.
  std::vector<std::vector<Vec2>> histories(static_cast<std::size_t>(hidden_cols));
  for (int rep = 0; rep < k; ++rep) {
    for (int j = 0; j < n_targets; ++j) {
      std::vector<Vec2>& history =
          histories[static_cast<std::size_t>(rep * n_targets + j)];
      for (int t = 0; t < t_obs; ++t) {
        const AgentState* state_j =
            window.find(t, batch.ped_of_col[static_cast<std::size_t>(j)]);
        if (state_j == nullptr) {
          throw DataError(DataError::Kind::WindowNotFound,
                          "target missing from an observation frame");
        }
        history.push_back(state_j->velocity);
      }
    }
  }

  // Non-target agents seen in the last observed frame are extrapolated at
  // constant velocity through the prediction horizon.
  std::vector<AgentState> extrapolation_bases;
  for (const AgentState& agent :
       window.frames[static_cast<std::size_t>(t_obs - 1)].agents) {
    if (!is_target(window, agent.agent_id)) extrapolation_bases.push_back(agent);
  }

  std::vector<Rng> sample_rngs;
  sample_rngs.reserve(static_cast<std::size_t>(k));
  for (int rep = 0; rep < k; ++rep) {
    sample_rngs.emplace_back(
        Rng::derive(seed, streams::kRollout,
                    static_cast<std::uint64_t>(window.window_id) * 100003ull +
                        static_cast<std::uint64_t>(rep)));
  }

  for (int p = 0; p < t_pred; ++p) {
    const Mat raw = model_head_raw(model, state.h);
    Mat next(2, hidden_cols);
    for (int col = 0; col < hidden_cols; ++col) {
      const int rep = col / n_targets;
      const int j = col % n_targets;
      const Vec2 disp = gaussian_sample(gaussian_from_raw(raw.col(col)), sample_rngs[
          static_cast<std::size_t>(rep)]);
      next(0, col) = cur(0, col) + disp.x;
      next(1, col) = cur(1, col) + disp.y;
      if (!std::isfinite(next(0, col)) || !std::isfinite(next(1, col))) {
        throw NumericalError("sampled prediction is not finite");
      }
      result.samples[static_cast<std::size_t>(rep)][static_cast<std::size_t>(j)]
          .push_back({next(0, col), next(1, col)});
    }
    if (p == t_pred - 1) break;

    const int t = t_obs + p;  // step about to be consumed
    const Mat spatial = next - cur;

    std::vector<AgentState> other_peds;
    std::vector<AgentState> vehicles;
    if (options.oracle_vehicles) {
      for (const AgentState& agent : window.frames[static_cast<std::size_t>(t)].agents) {
        if (agent.kind == AgentKind::Vehicle) vehicles.push_back(agent);
      }
    }
    for (const AgentState& base : extrapolation_bases) {
      AgentState moved = base;
      moved.position =
          base.position + base.velocity * (static_cast<double>(t - (t_obs - 1)) * dt);
      if (base.kind == AgentKind::Vehicle) {
        if (!options.oracle_vehicles) vehicles.push_back(moved);
      } else {
        other_peds.push_back(moved);
      }
    }

    Mat ppcg = Mat::Zero(model.dims.n_sector, hidden_cols);
    Mat vpcg = Mat::Zero(model.dims.n_sector, hidden_cols);
    std::vector<std::vector<int>> filtered(static_cast<std::size_t>(hidden_cols));
    for (int rep = 0; rep < k; ++rep) {
      std::vector<AgentState> targets(static_cast<std::size_t>(n_targets));
      for (int j = 0; j < n_targets; ++j) {
        const int col = rep * n_targets + j;
        AgentState& target = targets[static_cast<std::size_t>(j)];
        target.agent_id = batch.ped_of_col[static_cast<std::size_t>(j)];
        target.kind = AgentKind::Pedestrian;
        target.position = {next(0, col), next(1, col)};
        target.velocity = {spatial(0, col) / dt, spatial(1, col) / dt};
      }
      std::vector<AgentState> peds = targets;
      peds.insert(peds.end(), other_peds.begin(), other_peds.end());

      for (int j = 0; j < n_targets; ++j) {
        const int col = rep * n_targets + j;
        const AgentState& target = targets[static_cast<std::size_t>(j)];
        histories[static_cast<std::size_t>(col)].push_back(target.velocity);
        const std::optional<Vec2> heading = resolve_heading(
            histories[static_cast<std::size_t>(col)], options.features.heading_eps);

        const PolarCollisionGrid ped_grid =
            build_grid(target, select_interacting(target, peds, options.features.ped_params),
                       options.features.ped_params, model.dims.n_sector, heading);
        const PolarCollisionGrid veh_grid = build_grid(
            target, select_interacting(target, vehicles, options.features.veh_params),
            options.features.veh_params, model.dims.n_sector, heading);
        for (int s = 0; s < model.dims.n_sector; ++s) {
          ppcg(s, col) = ped_grid.values[static_cast<std::size_t>(s)];
          vpcg(s, col) = veh_grid.values[static_cast<std::size_t>(s)];
        }

        if (model.variant == Variant::SocialFiltered) {
          for (const InteractionRecord& rec :
               select_interacting(target, targets, options.features.ped_params)) {
            for (int o = 0; o < n_targets; ++o) {
              if (targets[static_cast<std::size_t>(o)].agent_id == rec.neighbor_id) {
                filtered[static_cast<std::size_t>(col)].push_back(rep * n_targets + o);
                break;
              }
            }
          }
        }
      }
    }

    StepInputs inputs;
    inputs.spatial = &spatial;
    inputs.ppcg = &ppcg;
    inputs.vpcg = &vpcg;
    inputs.positions = &next;
    if (model.variant == Variant::Social) {
      inputs.social_neighbors = &social_neighbors;
    } else if (model.variant == Variant::SocialFiltered) {
      inputs.social_neighbors = &filtered;
    }
    model_advance(model, inputs, state);
    cur = next;
  }

  return result;
}

void save_predictions(const std::string& path, const SceneWindow& window,
                      const RolloutResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(DataError::Kind::MissingFile, "cannot write predictions: " + path);
  }
  out << "window_id,pedestrian_id,sample_id,step,x_m,y_m,gt\n";
  for (std::size_t j = 0; j < result.pedestrian_ids.size(); ++j) {
    const std::int64_t id = result.pedestrian_ids[j];
    const std::vector<Vec2> gt = window.target_positions(id);
    for (int t = 0; t < window.steps(); ++t) {
      out << window.window_id << ',' << id << ",-1," << t << ','
          << format_double(gt[static_cast<std::size_t>(t)].x) << ','
          << format_double(gt[static_cast<std::size_t>(t)].y) << ",1\n";
    }
  }
  for (std::size_t rep = 0; rep < result.samples.size(); ++rep) {
    for (std::size_t j = 0; j < result.pedestrian_ids.size(); ++j) {
      const std::vector<Vec2>& trajectory = result.samples[rep][j];
      for (std::size_t p = 0; p < trajectory.size(); ++p) {
        out << window.window_id << ',' << result.pedestrian_ids[j] << ',' << rep << ','
            << window.t_obs + static_cast<int>(p) << ','
            << format_double(trajectory[p].x) << ',' << format_double(trajectory[p].y)
            << ",0\n";
      }
    }
  }
}

}  // namespace colgrid
