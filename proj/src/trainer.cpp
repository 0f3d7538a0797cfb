#include "colgrid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "colgrid/errors.hpp"
#include "colgrid/format.hpp"
#include "colgrid/rng.hpp"

namespace colgrid {

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) {
    throw DataError(DataError::Kind::InvalidConfig, "train config: " + what);
  };
  if (epochs < 1) fail("epochs must be at least 1");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
    fail("rmsprop_decay must lie in (0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) fail("rmsprop_epsilon must be positive");
  if (!(grad_clip_norm > 0.0)) fail("grad_clip_norm must be positive");
  if (!(holdout_frac >= 0.0 && holdout_frac < 1.0)) {
    fail("holdout_frac must lie in [0, 1)");
  }
  if (features.n_sector != dims.n_sector) {
    fail("feature sector count must match the model sector count");
  }
}

double global_grad_norm(const ModelParams& grads) {
  double sum = 0.0;
  for (const ConstTensorRef& ref : tensor_refs(grads)) {
    sum += ref.mat != nullptr ? ref.mat->squaredNorm() : ref.vec->squaredNorm();
  }
  return std::sqrt(sum);
}

void rmsprop_step(ModelParams& params, const ModelParams& grads, RmspropState& state,
                  const TrainConfig& config) {
  const std::vector<TensorRef> p_refs = tensor_refs(params);
  const std::vector<ConstTensorRef> g_refs = tensor_refs(grads);
  if (p_refs.size() != g_refs.size()) {
    throw ShapeMismatch("parameter and gradient tensors do not line up");
  }
  if (state.second_moment.empty()) {
    state.second_moment.reserve(p_refs.size());
    for (const TensorRef& ref : p_refs) {
      state.second_moment.push_back(ref.mat != nullptr
                                        ? Mat::Zero(ref.mat->rows(), ref.mat->cols())
                                        : Mat::Zero(ref.vec->size(), 1));
    }
  }
  if (state.second_moment.size() != p_refs.size()) {
    throw ShapeMismatch("optimizer state does not match the parameter set");
  }

  const double norm = global_grad_norm(grads);
  const double scale = norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;

  for (std::size_t i = 0; i < p_refs.size(); ++i) {
    Mat& s = state.second_moment[i];
    const auto update = [&](auto& param, const auto& grad) {
      if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
          param.rows() != s.rows() || param.cols() != s.cols()) {
        throw ShapeMismatch("tensor shape mismatch in optimizer update: " + p_refs[i].name);
      }
      const auto g = grad.array() * scale;
      s.array() = config.rmsprop_decay * s.array() +
                  (1.0 - config.rmsprop_decay) * g.square();
      param.array() -= config.learning_rate * g / (s.array().sqrt() + config.rmsprop_epsilon);
    };
    if (p_refs[i].mat != nullptr) {
      update(*p_refs[i].mat, *g_refs[i].mat);
    } else {
      Eigen::Map<Mat> param(p_refs[i].vec->data(), p_refs[i].vec->size(), 1);
      Eigen::Map<const Mat> grad(g_refs[i].vec->data(), g_refs[i].vec->size(), 1);
      update(param, grad);
    }
  }
}

TrainResult train(std::span<const SceneWindow> windows, const TrainConfig& config,
                  const EpochCallback& per_epoch) {
  config.validate();
  if (windows.empty()) {
    throw DataError(DataError::Kind::EmptyDataset, "no training windows");
  }

  const std::size_t n_holdout =
      static_cast<std::size_t>(config.holdout_frac * static_cast<double>(windows.size()));
  const std::size_t n_train = windows.size() - n_holdout;
  if (n_train == 0) {
    throw DataError(DataError::Kind::EmptyDataset,
                    "holdout fraction leaves no training windows");
  }
  const std::vector<SceneWindow> holdout(windows.begin() + static_cast<std::ptrdiff_t>(n_train),
                                         windows.end());
  for (const SceneWindow& window : windows) {
    if (window.t_obs != windows[0].t_obs || window.t_pred != windows[0].t_pred ||
        window.dt != windows[0].dt) {
      throw DataError(DataError::Kind::NonUniformWindows,
                      "all training windows must share t_obs, t_pred and dt");
    }
  }

  Rng init_rng(Rng::derive(config.seed, streams::kModelInit));
  ModelParams model = init_model(config.variant, config.dims, init_rng);
  RmspropState opt_state;

  ForwardOptions forward_options;
  forward_options.autoregressive = config.autoregressive_training;
  forward_options.features = config.features;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0u);

  TrainResult result;
  result.curve.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(
        Rng::derive(config.seed, streams::kTrainShuffle, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n_train; i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_int(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_weighted_sum = 0.0;
    for (std::size_t start = 0; start < n_train;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n_train, start + static_cast<std::size_t>(config.batch_size));
      std::vector<SceneWindow> batch_windows;
      batch_windows.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch_windows.push_back(windows[order[i]]);
      }

      const FeatureBatch batch = build_feature_batch(batch_windows, config.features);
      ForwardCache cache;
      const double batch_loss =
          model_forward(model, batch, &cache, forward_options, batch_windows);
      loss_weighted_sum += batch_loss * static_cast<double>(batch_windows.size());

      ModelParams grads = zeros_like(model);
      model_backward(model, batch, cache, grads);
      rmsprop_step(model, grads, opt_state, config);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_nll = loss_weighted_sum / static_cast<double>(n_train);
    if (!holdout.empty()) {
      const FeatureBatch batch = build_feature_batch(holdout, config.features);
      stats.holdout_nll = model_forward(model, batch, nullptr, forward_options, holdout);
    }
    result.curve.push_back(stats);
    if (per_epoch) per_epoch(model, stats);
  }

  result.model = std::move(model);
  return result;
}

void save_loss_curve(const std::string& path, std::span<const EpochStats> curve,
                     const std::string& config_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(DataError::Kind::MissingFile, "cannot write loss curve: " + path);
  }
  out << "# config: " << config_json << "\n";
  const bool with_holdout = !curve.empty() && curve.front().holdout_nll.has_value();
  out << (with_holdout ? "epoch,train_nll,holdout_nll\n" : "epoch,train_nll\n");
  for (const EpochStats& stats : curve) {
    out << stats.epoch << ',' << format_double(stats.train_nll);
    if (with_holdout) out << ',' << format_double(stats.holdout_nll.value());
    out << '\n';
  }
}

}  // namespace colgrid
