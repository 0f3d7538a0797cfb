#include "colgrid/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace colgrid {

std::optional<double> time_to_collision(const AgentState& a, const AgentState& b, double d_min) {
  const Vec2 d_rel = a.position - b.position;
  const Vec2 v_rel = a.velocity - b.velocity;

  if (d_rel.norm() < d_min) return 0.0;  // already inside the comfort disc

  const double v2 = v_rel.squared_norm();
  if (v_rel.norm() < kRelativeSpeedEps) return std::nullopt;

  const double dv = d_rel.dot(v_rel);
  const double disc = dv * dv - v2 * (d_rel.squared_norm() - d_min * d_min);
  if (disc < 0.0) return std::nullopt;

  const double sq = std::sqrt(disc);
  const double t_enter = (-dv - sq) / v2;
  const double t_exit = (-dv + sq) / v2;
  if (t_enter >= 0.0) return t_enter;
  if (t_exit >= 0.0) return 0.0;  // on the boundary right now (t_enter <= 0 <= t_exit)
  return std::nullopt;
}

std::vector<InteractionRecord> select_interacting(const AgentState& target,
                                                  std::span<const AgentState> neighbors,
                                                  const InteractionParams& params) {
  std::vector<InteractionRecord> out;
  for (const auto& n : neighbors) {
    if (n.agent_id == target.agent_id) continue;
    const auto ttc = time_to_collision(target, n, params.d_min);
    if (!ttc.has_value() || *ttc > params.ttc_threshold) continue;
    out.push_back(InteractionRecord{n.agent_id, *ttc, n.velocity, n.position});
  }
  std::sort(out.begin(), out.end(), [](const InteractionRecord& lhs, const InteractionRecord& rhs) {
    if (lhs.ttc != rhs.ttc) return lhs.ttc < rhs.ttc;
    return lhs.neighbor_id < rhs.neighbor_id;
  });
  return out;
}

}  // namespace colgrid
