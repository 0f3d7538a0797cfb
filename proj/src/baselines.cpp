#include "colgrid/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "colgrid/errors.hpp"

namespace colgrid {

std::vector<Vec2> linear_regression_predict(std::span<const Vec2> observed, int t_pred) {
  if (observed.size() < 2) {
    throw ShapeMismatch("linear regression needs at least two observed positions");
  }
  if (t_pred < 1) throw ShapeMismatch("prediction horizon must be at least one step");

  const double n = static_cast<double>(observed.size());
  double sum_t = 0.0, sum_tt = 0.0;
  double sum_x = 0.0, sum_y = 0.0, sum_tx = 0.0, sum_ty = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double t = static_cast<double>(i);
    sum_t += t;
    sum_tt += t * t;
    sum_x += observed[i].x;
    sum_y += observed[i].y;
    sum_tx += t * observed[i].x;
    sum_ty += t * observed[i].y;
  }
  const double denom = n * sum_tt - sum_t * sum_t;  // > 0 for n >= 2 distinct steps
  const double slope_x = (n * sum_tx - sum_t * sum_x) / denom;
  const double slope_y = (n * sum_ty - sum_t * sum_y) / denom;
  const double intercept_x = (sum_x - slope_x * sum_t) / n;
  const double intercept_y = (sum_y - slope_y * sum_t) / n;

  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(t_pred));
  for (int k = 0; k < t_pred; ++k) {
    const double t = n + static_cast<double>(k);
    out.push_back({intercept_x + slope_x * t, intercept_y + slope_y * t});
  }
  return out;
}

std::optional<int> social_cell_index(Vec2 relative, const SocialPoolConfig& config) {
  const double half = config.neighborhood_m / 2.0;
  const double cell = config.neighborhood_m / config.grid_cells;
  const int cx = static_cast<int>(std::floor((relative.x + half) / cell));
  const int cy = static_cast<int>(std::floor((relative.y + half) / cell));
  if (cx < 0 || cx >= config.grid_cells || cy < 0 || cy >= config.grid_cells) {
    return std::nullopt;
  }
  return cy * config.grid_cells + cx;
}

Mat social_pool(const AgentState& target, std::span<const NeighborHidden> neighbors,
                int hidden_dim, const SocialPoolConfig& config) {
  Mat pooled = Mat::Zero(config.grid_cells * config.grid_cells, hidden_dim);
  for (const NeighborHidden& nb : neighbors) {
    if (nb.hidden.size() != hidden_dim) {
      throw ShapeMismatch("pooled hidden vectors must share one dimension");
    }
    const std::optional<int> cell =
        social_cell_index(nb.state.position - target.position, config);
    if (!cell) continue;
    pooled.row(*cell) += nb.hidden.transpose();
  }
  return pooled;
}

Mat filtered_social_pool(const AgentState& target, std::span<const NeighborHidden> neighbors,
                         int hidden_dim, const SocialPoolConfig& config,
                         const InteractionParams& params) {
  std::vector<AgentState> states;
  states.reserve(neighbors.size());
  for (const NeighborHidden& nb : neighbors) states.push_back(nb.state);
  const std::vector<InteractionRecord> kept = select_interacting(target, states, params);

  std::vector<NeighborHidden> subset;
  for (const NeighborHidden& nb : neighbors) {
    const bool selected =
        std::any_of(kept.begin(), kept.end(), [&](const InteractionRecord& rec) {
          return rec.neighbor_id == nb.state.agent_id;
        });
    if (selected) subset.push_back(nb);
  }
  return social_pool(target, subset, hidden_dim, config);
}

}  // namespace colgrid
