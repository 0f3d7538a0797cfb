#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "colgrid/types.hpp"

namespace colgrid {

/// Class-pair interaction parameters. Defaults: pedestrian-pedestrian
/// (9 s, 0.7 m) and pedestrian-vehicle (8 s, 1.0 m).
struct InteractionParams {
  double ttc_threshold{9.0};  // seconds
  double d_min{0.7};          // meters
};

inline constexpr InteractionParams kPedPedParams{9.0, 0.7};
inline constexpr InteractionParams kPedVehParams{8.0, 1.0};

/// A neighbor that passed the time-to-collision filter.
struct InteractionRecord {
  std::int64_t neighbor_id{0};
  double ttc{0.0};  // in [0, ttc_threshold]
  Vec2 neighbor_velocity;
  Vec2 neighbor_position;
};

/// Relative speeds below this are treated as zero relative motion (no TTC).
inline constexpr double kRelativeSpeedEps = 1e-9;

/// First time two constant-velocity agents come within d_min of each other.
/// Returns 0 if they are already closer than d_min, nullopt if they never
/// close in (zero relative speed, negative discriminant, or both crossing
/// times in the past).
std::optional<double> time_to_collision(const AgentState& a, const AgentState& b, double d_min);

/// Neighbors whose TTC against the target lies in [0, ttc_threshold],
/// ordered by ascending TTC then ascending id. The target itself is skipped.
std::vector<InteractionRecord> select_interacting(const AgentState& target,
                                                  std::span<const AgentState> neighbors,
                                                  const InteractionParams& params);

}  // namespace colgrid
