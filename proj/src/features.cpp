#include "colgrid/features.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>

#include "colgrid/errors.hpp"

namespace colgrid {

namespace {

/// Grids plus the records that produced them, for one target at one step.
struct StepGrids {
  PolarCollisionGrid ppcg;
  PolarCollisionGrid vpcg;
  std::vector<InteractionRecord> ped_records;
  std::vector<InteractionRecord> veh_records;
};

StepGrids grids_for(const AgentState& target, const Frame& frame,
                    std::optional<Vec2> heading_fallback, const FeatureConfig& config) {
  std::vector<AgentState> peds;
  std::vector<AgentState> vehicles;
  for (const AgentState& agent : frame.agents) {
    (agent.kind == AgentKind::Pedestrian ? peds : vehicles).push_back(agent);
  }
  StepGrids out;
  out.ped_records = select_interacting(target, peds, config.ped_params);
  out.veh_records = select_interacting(target, vehicles, config.veh_params);
  out.ppcg = build_grid(target, out.ped_records, config.ped_params, config.n_sector,
                        heading_fallback);
  out.vpcg = build_grid(target, out.veh_records, config.veh_params, config.n_sector,
                        heading_fallback);
  return out;
}

const AgentState& target_state(const Frame& frame, std::int64_t agent_id) {
  const AgentState* state = frame.find(agent_id);
  if (state == nullptr) {
    throw DataError(DataError::Kind::WindowNotFound,
                    "target pedestrian " + std::to_string(agent_id) +
                        " missing from frame " + std::to_string(frame.frame_id));
  }
  return *state;
}

}  // namespace

FeatureBatch build_feature_batch(std::span<const SceneWindow> windows,
                                 const FeatureConfig& config) {
  FeatureBatch batch;
  if (windows.empty()) return batch;

  batch.t_obs = windows[0].t_obs;
  batch.t_pred = windows[0].t_pred;
  batch.dt = windows[0].dt;
  for (const SceneWindow& window : windows) {
    if (window.t_obs != batch.t_obs || window.t_pred != batch.t_pred ||
        window.dt != batch.dt) {
      throw DataError(DataError::Kind::NonUniformWindows,
                      "all windows must share t_obs, t_pred and dt");
    }
  }

  batch.n_windows = static_cast<int>(windows.size());
  batch.cols_of_window.resize(windows.size());
  for (int w = 0; w < batch.n_windows; ++w) {
    batch.window_ids.push_back(windows[w].window_id);
    for (std::int64_t id : windows[w].target_ids) {
      batch.cols_of_window[w].push_back(batch.cols());
      batch.window_of_col.push_back(w);
      batch.ped_of_col.push_back(id);
    }
  }

  const int steps = batch.steps();
  const int n_cols = batch.cols();
  batch.spatial.assign(steps, Mat::Zero(2, n_cols));
  batch.ppcg.assign(steps, Mat::Zero(config.n_sector, n_cols));
  batch.vpcg.assign(steps, Mat::Zero(config.n_sector, n_cols));
  batch.positions.assign(steps, Mat::Zero(2, n_cols));
  batch.target_disp.assign(steps - 1, Mat::Zero(2, n_cols));
  batch.filtered_neighbors.assign(
      steps, std::vector<std::vector<int>>(static_cast<std::size_t>(n_cols)));

  // Velocity history per column, grown one entry per step for the heading
  // fallback scan.
  std::vector<std::vector<Vec2>> history(static_cast<std::size_t>(n_cols));

  for (int w = 0; w < batch.n_windows; ++w) {
    const SceneWindow& window = windows[w];
    const std::vector<int>& cols = batch.cols_of_window[w];
    for (int t = 0; t < steps; ++t) {
      const Frame& frame = window.frames[static_cast<std::size_t>(t)];

      // States of this window's targets at step t, for the social TTC filter.
      std::vector<AgentState> co_targets;
      co_targets.reserve(cols.size());
      for (std::size_t k = 0; k < cols.size(); ++k) {
        co_targets.push_back(target_state(frame, window.target_ids[k]));
      }

      for (std::size_t k = 0; k < cols.size(); ++k) {
        const int col = cols[k];
        const AgentState& target = co_targets[k];
        batch.positions[t](0, col) = target.position.x;
        batch.positions[t](1, col) = target.position.y;

        history[static_cast<std::size_t>(col)].push_back(target.velocity);
        const std::optional<Vec2> heading =
            resolve_heading(history[static_cast<std::size_t>(col)], config.heading_eps);

        const StepGrids grids = grids_for(target, frame, heading, config);
        for (int s = 0; s < config.n_sector; ++s) {
          batch.ppcg[t](s, col) = grids.ppcg.values[static_cast<std::size_t>(s)];
          batch.vpcg[t](s, col) = grids.vpcg.values[static_cast<std::size_t>(s)];
        }

        for (const InteractionRecord& rec :
             select_interacting(target, co_targets, config.ped_params)) {
          for (std::size_t j = 0; j < cols.size(); ++j) {
            if (window.target_ids[j] == rec.neighbor_id) {
              batch.filtered_neighbors[t][static_cast<std::size_t>(col)].push_back(
                  cols[j]);
              break;
            }
          }
        }
      }
    }
  }

  for (int t = 0; t + 1 < steps; ++t) {
    batch.spatial[t + 1] = batch.positions[t + 1] - batch.positions[t];
    batch.target_disp[t] = batch.positions[t + 1] - batch.positions[t];
  }
  return batch;
}

std::string window_grid_debug(const SceneWindow& window, std::int64_t pedestrian_id,
                              const FeatureConfig& config) {
  if (std::find(window.target_ids.begin(), window.target_ids.end(), pedestrian_id) ==
      window.target_ids.end()) {
    throw DataError(DataError::Kind::WindowNotFound,
                    "pedestrian " + std::to_string(pedestrian_id) +
                        " is not a target of window " + std::to_string(window.window_id));
  }

  nlohmann::json out = nlohmann::json::array();
  std::vector<Vec2> history;
  for (int t = 0; t < window.steps(); ++t) {
    const Frame& frame = window.frames[static_cast<std::size_t>(t)];
    const AgentState& target = target_state(frame, pedestrian_id);
    history.push_back(target.velocity);
    const StepGrids grids =
        grids_for(target, frame, resolve_heading(history, config.heading_eps), config);

    std::set<std::int64_t> ids;
    for (const InteractionRecord& rec : grids.ped_records) ids.insert(rec.neighbor_id);
    for (const InteractionRecord& rec : grids.veh_records) ids.insert(rec.neighbor_id);

    nlohmann::json entry;
    entry["pedestrian_id"] = pedestrian_id;
    entry["step"] = t;
    entry["ppcg"] = grids.ppcg.values;
    entry["vpcg"] = grids.vpcg.values;
    entry["interacting_ids"] = std::vector<std::int64_t>(ids.begin(), ids.end());
    out.push_back(std::move(entry));
  }
  return out.dump(2);
}

}  // namespace colgrid
