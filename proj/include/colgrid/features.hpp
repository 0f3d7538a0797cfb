#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "colgrid/collision_grid.hpp"
#include "colgrid/geometry.hpp"
#include "colgrid/nn.hpp"
#include "colgrid/scene.hpp"

namespace colgrid {

/// Shared knobs for interaction-feature construction.
struct FeatureConfig {
  InteractionParams ped_params = kPedPedParams;  // pedestrian-pedestrian gate
  InteractionParams veh_params = kPedVehParams;  // pedestrian-vehicle gate
  int n_sector = 8;
  double heading_eps = kHeadingEps;
};

/// Model-ready tensors for a set of uniform windows. Every (window, target)
/// pair owns one column; all per-step matrices share that column layout so a
/// whole batch advances through the network in lockstep.
struct FeatureBatch {
  int n_windows = 0;
  int t_obs = 0;
  int t_pred = 0;
  double dt = 0.5;

  std::vector<std::int64_t> window_ids;          // per window index
  std::vector<int> window_of_col;                // column -> window index
  std::vector<std::int64_t> ped_of_col;          // column -> pedestrian id
  std::vector<std::vector<int>> cols_of_window;  // window index -> its columns

  // One entry per step t in [0, steps): [dim x n_cols].
  std::vector<Mat> spatial;    // 2 rows: displacement from step t-1 ((0,0) at t=0)
  std::vector<Mat> ppcg;       // n_sector rows: pedestrian collision grid
  std::vector<Mat> vpcg;       // n_sector rows: vehicle collision grid
  std::vector<Mat> positions;  // 2 rows: absolute position at step t

  // target_disp[t] = positions[t+1] - positions[t]; size steps-1. The head
  // attached after consuming step t is scored against target_disp[t].
  std::vector<Mat> target_disp;

  // filtered_neighbors[t][col] = columns of the same window whose agent
  // passes the pedestrian TTC gate against col's target at step t.
  std::vector<std::vector<std::vector<int>>> filtered_neighbors;

  int steps() const { return t_obs + t_pred; }
  int cols() const { return static_cast<int>(window_of_col.size()); }
};

/// Builds the batch from uniform windows (same t_obs/t_pred/dt everywhere,
/// else DataError NonUniformWindows). Grids use ground-truth states of every
/// agent present in the frame; a target with no usable heading anywhere in
/// its history up to t gets zero grids at t.
FeatureBatch build_feature_batch(std::span<const SceneWindow> windows,
                                 const FeatureConfig& config = {});

/// Per-step grid dump for one target pedestrian of one window, as a JSON
/// array of {pedestrian_id, step, ppcg, vpcg, interacting_ids} objects.
/// Throws DataError WindowNotFound if the pedestrian is not a target.
std::string window_grid_debug(const SceneWindow& window, std::int64_t pedestrian_id,
                              const FeatureConfig& config = {});

}  // namespace colgrid
