#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colgrid/features.hpp"
#include "colgrid/model.hpp"

namespace colgrid {

struct RolloutOptions {
  // Use ground-truth vehicle states during the prediction horizon instead of
  // constant-velocity extrapolation (upper-bound studies only).
  bool oracle_vehicles = false;
  FeatureConfig features;
};

/// K sampled futures for every target of one window.
/// samples[k][target][step] is the position at prediction step `step`.
struct RolloutResult {
  std::vector<std::int64_t> pedestrian_ids;  // same order as window.target_ids
  std::vector<std::vector<std::vector<Vec2>>> samples;
};

/// Warms the LSTM on the observed steps with ground-truth inputs, then rolls
/// all targets forward jointly: each prediction step samples every target's
/// displacement, and the next step's grids are rebuilt from those sampled
/// positions. Non-target agents are extrapolated at constant velocity from
/// the last observed frame. Deterministic given (window, model, k, seed) and
/// independent across samples.
RolloutResult rollout(const SceneWindow& window, const ModelParams& model, int k,
                      std::uint64_t seed, const RolloutOptions& options = {});

/// Constant-velocity future: positions X + s*dt*V for s = 1..steps.
std::vector<Vec2> extrapolate_vehicle(const AgentState& state, int steps, double dt);

/// Plot-data CSV: window_id,pedestrian_id,sample_id,step,x_m,y_m,gt.
/// Ground-truth rows (sample_id -1, gt=1) cover every step of the window;
/// sample rows (gt=0) cover the prediction steps.
void save_predictions(const std::string& path, const SceneWindow& window,
                      const RolloutResult& result);

}  // namespace colgrid
