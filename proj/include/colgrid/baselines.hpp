#pragma once

#include <optional>
#include <span>
#include <vector>

#include "colgrid/geometry.hpp"
#include "colgrid/nn.hpp"
#include "colgrid/types.hpp"

namespace colgrid {

/// Square pooling neighborhood centered on the target, split into
/// grid_cells x grid_cells axis-aligned cells.
struct SocialPoolConfig {
  double neighborhood_m = 4.0;
  int grid_cells = 4;
};

/// Ordinary least squares line fit per position dimension against the step
/// index over the observed track, extrapolated t_pred steps past the end.
std::vector<Vec2> linear_regression_predict(std::span<const Vec2> observed, int t_pred);

/// Cell index for a neighbor displaced by `relative` from the target, or
/// nullopt outside the neighborhood. Cells are half-open on the high side;
/// the index is cell_y * grid_cells + cell_x with x, y cells counted from
/// the low corner.
std::optional<int> social_cell_index(Vec2 relative, const SocialPoolConfig& config);

struct NeighborHidden {
  AgentState state;
  Vector hidden;
};

/// Sum-pools neighbor hidden vectors into a [grid_cells^2 x hidden_dim]
/// tensor; row k collects every neighbor whose cell index is k. The hidden
/// dimension is passed explicitly so an empty neighbor list still yields a
/// correctly shaped all-zero tensor.
Mat social_pool(const AgentState& target, std::span<const NeighborHidden> neighbors,
                int hidden_dim, const SocialPoolConfig& config);

/// social_pool restricted to neighbors that pass the TTC gate against the
/// target (select_interacting with `params`).
Mat filtered_social_pool(const AgentState& target, std::span<const NeighborHidden> neighbors,
                         int hidden_dim, const SocialPoolConfig& config,
                         const InteractionParams& params);

}  // namespace colgrid
