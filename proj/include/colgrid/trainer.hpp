#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colgrid/features.hpp"
#include "colgrid/model.hpp"

namespace colgrid {

struct TrainConfig {
  Variant variant = Variant::PV;
  ModelDims dims;
  FeatureConfig features;
  int epochs = 200;
  int batch_size = 10;
  double learning_rate = 0.001;
  double rmsprop_decay = 0.99;
  double rmsprop_epsilon = 1e-8;
  double grad_clip_norm = 10.0;
  std::uint64_t seed = 0;
  // Fraction of windows (taken from the end of the input order) reserved for
  // a per-epoch held-out loss readout; never trained on.
  double holdout_frac = 0.0;
  // Feed predicted mean displacements back as inputs during the prediction
  // horizon instead of teacher forcing (fed-back paths are detached).
  bool autoregressive_training = false;

  void validate() const;  // DataError InvalidConfig
};

/// Per-tensor second-moment accumulators, parallel to tensor_refs order.
struct RmspropState {
  std::vector<Mat> second_moment;
};

/// L2 norm over every enabled gradient tensor.
double global_grad_norm(const ModelParams& grads);

/// Applies one RMSProp update in place: gradients are globally norm-clipped
/// to grad_clip_norm, then s <- decay*s + (1-decay)*g^2 and
/// p <- p - lr * g / (sqrt(s) + eps), elementwise. The state is created
/// lazily on first use.
void rmsprop_step(ModelParams& params, const ModelParams& grads, RmspropState& state,
                  const TrainConfig& config);

struct EpochStats {
  int epoch = 0;                     // 1-based
  double train_nll = 0.0;            // mean per-window loss over the epoch
  std::optional<double> holdout_nll;  // present when holdout_frac > 0
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochStats> curve;
};

using EpochCallback = std::function<void(const ModelParams&, const EpochStats&)>;

/// Trains a fresh model on the windows. Deterministic given (windows, config):
/// initialization and the per-epoch shuffle derive from config.seed.
TrainResult train(std::span<const SceneWindow> windows, const TrainConfig& config,
                  const EpochCallback& per_epoch = {});

/// Loss curve CSV: a `# config: {...}` comment line, then
/// epoch,train_nll[,holdout_nll] rows.
void save_loss_curve(const std::string& path, std::span<const EpochStats> curve,
                     const std::string& config_json);

}  // namespace colgrid
