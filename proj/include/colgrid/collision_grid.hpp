#pragma once

#include <optional>
#include <span>
#include <vector>

#include "colgrid/geometry.hpp"
#include "colgrid/types.hpp"

namespace colgrid {

/// Speeds below this give no usable heading (approach angles undefined).
inline constexpr double kHeadingEps = 0.05;  // m/s

/// Per-sector collision-risk values: values[k] = max over interacting agents
/// in sector k of (ttc_threshold - ttc), 0 for empty sectors.
struct PolarCollisionGrid {
  std::vector<double> values;

  int n_sector() const { return static_cast<int>(values.size()); }
  bool all_zero() const {
    for (double v : values) {
      if (v != 0.0) return false;
    }
    return true;
  }
};

/// Sector of the counter-clockwise angle from v_target to v_neighbor.
/// Sector k covers [k*360/n, (k+1)*360/n) degrees; a wrap at 360 maps to the
/// last sector, never to n_sector. Returns nullopt when |v_target| is below
/// the heading epsilon (caller skips the neighbor or supplies a fallback).
std::optional<int> approach_sector(Vec2 v_target, Vec2 v_neighbor, int n_sector);

/// Assembles the polar grid for one target from its interaction records.
/// The target's own velocity provides the heading; if it is below the
/// heading epsilon the caller may pass the most recent fast-enough velocity
/// as `heading_fallback`. With no usable heading every record is skipped and
/// the grid stays zero. A neighbor with (near-)zero velocity is binned by
/// the direction (target position - neighbor position) instead of its
/// velocity, so a stationary obstacle dead ahead lands opposite sector 0.
PolarCollisionGrid build_grid(const AgentState& target,
                              std::span<const InteractionRecord> interactions,
                              const InteractionParams& params, int n_sector,
                              std::optional<Vec2> heading_fallback = std::nullopt);

/// Position difference between steps t and t-1; (0,0) at t = 0.
Vec2 spatial_displacement(std::span<const Vec2> positions, int t);

/// Scans a velocity history (oldest first, last entry = current) backwards
/// for the most recent entry with speed >= heading_eps.
std::optional<Vec2> resolve_heading(std::span<const Vec2> velocity_history,
                                    double heading_eps = kHeadingEps);

}  // namespace colgrid
