#include "colgrid/collision_grid.hpp"

#include <cmath>

namespace colgrid {

namespace {
constexpr double kZeroVelocityEps = 1e-12;  // m/s, "exactly stationary"
}

std::optional<int> approach_sector(Vec2 v_target, Vec2 v_neighbor, int n_sector) {
  if (v_target.norm() < kHeadingEps) return std::nullopt;

  double theta = std::atan2(v_target.cross(v_neighbor), v_target.dot(v_neighbor));
  if (theta < 0.0) theta += 2.0 * M_PI;  // CCW angle in [0, 2*pi)
  int sector = static_cast<int>(std::floor(theta / (2.0 * M_PI / n_sector)));
  if (sector >= n_sector) sector = n_sector - 1;  // wrap of angles rounding up to 360
  if (sector < 0) sector = 0;
  return sector;
}

PolarCollisionGrid build_grid(const AgentState& target,
                              std::span<const InteractionRecord> interactions,
                              const InteractionParams& params, int n_sector,
                              std::optional<Vec2> heading_fallback) {
  PolarCollisionGrid grid;
  grid.values.assign(static_cast<std::size_t>(n_sector), 0.0);

  Vec2 heading = target.velocity;
  if (heading.norm() < kHeadingEps) {
    if (!heading_fallback.has_value()) return grid;  // no usable heading
    heading = *heading_fallback;
    if (heading.norm() < kHeadingEps) return grid;
  }

  for (const auto& rec : interactions) {
    Vec2 dir = rec.neighbor_velocity;
    if (dir.norm() < kZeroVelocityEps) {
      dir = target.position - rec.neighbor_position;  // stationary-neighbor convention
    }
    const auto sector = approach_sector(heading, dir, n_sector);
    if (!sector.has_value()) continue;
    const double risk = params.ttc_threshold - rec.ttc;
    auto& cell = grid.values[static_cast<std::size_t>(*sector)];
    cell = std::max(cell, risk);  // riskiest agent per sector wins
  }
  return grid;
}

Vec2 spatial_displacement(std::span<const Vec2> positions, int t) {
  if (t <= 0) return Vec2{0.0, 0.0};
  return positions[static_cast<std::size_t>(t)] - positions[static_cast<std::size_t>(t - 1)];
}

std::optional<Vec2> resolve_heading(std::span<const Vec2> velocity_history, double heading_eps) {
  for (auto it = velocity_history.rbegin(); it != velocity_history.rend(); ++it) {
    if (it->norm() >= heading_eps) return *it;
  }
  return std::nullopt;
}

}  // namespace colgrid
