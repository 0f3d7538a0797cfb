#pragma once

#include <optional>
#include <span>
#include <vector>

#include "colgrid/types.hpp"

namespace colgrid {

/// Point-set distance flavor: Dubuisson-Jain modified Hausdorff (max of the
/// two directed mean-of-min distances) or the classical Hausdorff (max of
/// the two directed max-of-min distances).
enum class MhdMode { Dubuisson, Hausdorff };

/// Mean Euclidean distance over aligned steps.
double ade(std::span<const Vec2> pred, std::span<const Vec2> gt);

/// Euclidean distance at the final step.
double fde(std::span<const Vec2> pred, std::span<const Vec2> gt);

/// Symmetric point-set distance between the two trajectories.
double mhd(std::span<const Vec2> a, std::span<const Vec2> b,
           MhdMode mode = MhdMode::Dubuisson);

/// RMSE between per-interval speeds (consecutive displacements / dt).
double speed_error(std::span<const Vec2> pred, std::span<const Vec2> gt, double dt);

/// RMSE in degrees between per-interval headings, wrapped to (-180, 180],
/// over intervals where the ground-truth speed is at least 0.05 m/s.
/// nullopt when no interval qualifies.
std::optional<double> heading_error(std::span<const Vec2> pred, std::span<const Vec2> gt,
                                    double dt);

/// Minimum ground-truth speed for an interval to have a defined heading.
inline constexpr double kHeadingSpeedEps = 0.05;  // m/s

struct TrajectoryMetrics {
  double ade = 0.0;
  double fde = 0.0;
  double mhd = 0.0;
  double se = 0.0;
  std::optional<double> he;
};

TrajectoryMetrics all_metrics(std::span<const Vec2> pred, std::span<const Vec2> gt,
                              double dt, MhdMode mode = MhdMode::Dubuisson);

/// Best-of-K aggregation over sampled trajectories. By default every metric
/// is minimized independently across samples; with joint_by_ade the sample
/// with the lowest ADE supplies all metrics.
TrajectoryMetrics best_of_k(std::span<const std::vector<Vec2>> samples,
                            std::span<const Vec2> gt, double dt,
                            MhdMode mode = MhdMode::Dubuisson, bool joint_by_ade = false);

}  // namespace colgrid
