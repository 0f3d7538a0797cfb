#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "colgrid/types.hpp"

namespace colgrid {

struct Frame {
  std::int64_t frame_id{0};
  std::vector<AgentState> agents;

  const AgentState* find(std::int64_t agent_id) const;
};

/// A recorded scene: ordered frames of agent states at a fixed frame rate.
/// Frame ids are sample indices at frame_rate_hz (id / rate = seconds).
/// Immutable by convention once built; all transforms return new scenes.
struct Scene {
  double frame_rate_hz{2.0};
  std::vector<Frame> frames;

  double dt() const { return 1.0 / frame_rate_hz; }
  std::size_t state_count() const;
};

/// One observation + prediction slice. Targets are the pedestrians present in
/// every one of the t_obs + t_pred frames; other agents may come and go.
struct SceneWindow {
  std::int64_t window_id{0};  // frame_id of the first frame in the slice
  int t_obs{6};
  int t_pred{6};
  double dt{0.5};
  std::vector<Frame> frames;  // size t_obs + t_pred
  std::vector<std::int64_t> target_ids;

  int steps() const { return t_obs + t_pred; }
  const AgentState* find(int step, std::int64_t agent_id) const;
  /// Positions of one target over all steps (requires full presence).
  std::vector<Vec2> target_positions(std::int64_t agent_id) const;
  /// Ground-truth positions over the prediction steps only.
  std::vector<Vec2> ground_truth(std::int64_t agent_id) const;
};

enum class SceneFormat { CanonicalCsv };
enum class CyclistPolicy { Vehicle, Pedestrian, Drop };

inline constexpr const char* kCanonicalCsvHeader = "frame_id,agent_id,agent_type,x_m,y_m";

/// Parses the canonical CSV schema (frame_id,agent_id,agent_type,x_m,y_m).
/// Rows must be grouped by non-decreasing frame_id. Cyclist rows are remapped
/// per `cyclist_as`. Agents with non-contiguous presence are rejected.
Scene load_scene(const std::string& path, SceneFormat format = SceneFormat::CanonicalCsv,
                 CyclistPolicy cyclist_as = CyclistPolicy::Vehicle, double frame_rate_hz = 2.0);

/// Writes the canonical CSV. Values use shortest round-trip formatting, so
/// save -> load reproduces coordinates exactly.
void save_scene(const Scene& scene, const std::string& path);

/// Backward differences v_t = (X_t - X_{t-1}) / dt; an agent's first frame
/// copies the following difference. Single-frame agents get (0,0) and their
/// ids are appended to `single_frame_warnings` when provided.
Scene derive_velocities(const Scene& scene,
                        std::vector<std::int64_t>* single_frame_warnings = nullptr);

/// Stride-spaced windows; windows without any pedestrian target are dropped.
std::vector<SceneWindow> make_windows(const Scene& scene, int t_obs, int t_pred, int stride);

struct SceneSplit {
  Scene test;
  Scene train;
};

/// First `minutes` of the scene (frame_id / rate < minutes * 60) become the
/// test split, the remainder the train split. Agents spanning the boundary
/// appear truncated in both.
SceneSplit split_first_minutes(const Scene& scene, double minutes);

}  // namespace colgrid
