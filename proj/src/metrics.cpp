#include "colgrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "colgrid/errors.hpp"

namespace colgrid {

namespace {

void require_aligned(std::span<const Vec2> pred, std::span<const Vec2> gt,
                     std::size_t min_len) {
  if (pred.size() != gt.size()) {
    throw ShapeMismatch("trajectories must have equal length");
  }
  if (pred.size() < min_len) {
    throw ShapeMismatch("trajectory too short for this metric");
  }
}

/// Directed distance from a to b: aggregate over a of min-distance to b.
double directed(std::span<const Vec2> a, std::span<const Vec2> b, MhdMode mode) {
  double acc = 0.0;
  for (const Vec2& p : a) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const Vec2& q : b) nearest = std::min(nearest, (p - q).norm());
    acc = mode == MhdMode::Dubuisson ? acc + nearest : std::max(acc, nearest);
  }
  return mode == MhdMode::Dubuisson ? acc / static_cast<double>(a.size()) : acc;
}

std::vector<double> interval_speeds(std::span<const Vec2> traj, double dt) {
  std::vector<double> out;
  out.reserve(traj.size() - 1);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    out.push_back((traj[i + 1] - traj[i]).norm() / dt);
  }
  return out;
}

double heading_deg(Vec2 displacement) {
  return std::atan2(displacement.y, displacement.x) * 180.0 / M_PI;
}

double wrap_deg(double angle) {
  double wrapped = std::remainder(angle, 360.0);  // [-180, 180]
  if (wrapped == -180.0) wrapped = 180.0;
  return wrapped;
}

}  // namespace

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  require_aligned(pred, gt, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - gt[i]).norm();
  return sum / static_cast<double>(pred.size());
}

double fde(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  require_aligned(pred, gt, 1);
  return (pred.back() - gt.back()).norm();
}

double mhd(std::span<const Vec2> a, std::span<const Vec2> b, MhdMode mode) {
  if (a.empty() || b.empty()) {
    throw ShapeMismatch("point-set distance needs nonempty trajectories");
  }
  return std::max(directed(a, b, mode), directed(b, a, mode));
}

double speed_error(std::span<const Vec2> pred, std::span<const Vec2> gt, double dt) {
  require_aligned(pred, gt, 2);
  const std::vector<double> sp = interval_speeds(pred, dt);
  const std::vector<double> sg = interval_speeds(gt, dt);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double diff = sp[i] - sg[i];
    sum_sq += diff * diff;
  }
  return std::sqrt(sum_sq / static_cast<double>(sp.size()));
}

std::optional<double> heading_error(std::span<const Vec2> pred, std::span<const Vec2> gt,
                                    double dt) {
  require_aligned(pred, gt, 2);
  double sum_sq = 0.0;
  int used = 0;
  for (std::size_t i = 0; i + 1 < gt.size(); ++i) {
    const Vec2 gt_disp = gt[i + 1] - gt[i];
    if (gt_disp.norm() / dt < kHeadingSpeedEps) continue;
    const double diff = wrap_deg(heading_deg(pred[i + 1] - pred[i]) - heading_deg(gt_disp));
    sum_sq += diff * diff;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return std::sqrt(sum_sq / static_cast<double>(used));
}

TrajectoryMetrics all_metrics(std::span<const Vec2> pred, std::span<const Vec2> gt,
                              double dt, MhdMode mode) {
  TrajectoryMetrics out;
  out.ade = ade(pred, gt);
  out.fde = fde(pred, gt);
  out.mhd = mhd(pred, gt, mode);
  out.se = pred.size() >= 2 ? speed_error(pred, gt, dt) : 0.0;
  out.he = pred.size() >= 2 ? heading_error(pred, gt, dt) : std::nullopt;
  return out;
}

TrajectoryMetrics best_of_k(std::span<const std::vector<Vec2>> samples,
                            std::span<const Vec2> gt, double dt, MhdMode mode,
                            bool joint_by_ade) {
  if (samples.empty()) throw ShapeMismatch("best-of-k needs at least one sample");

  std::vector<TrajectoryMetrics> per_sample;
  per_sample.reserve(samples.size());
  for (const std::vector<Vec2>& sample : samples) {
    per_sample.push_back(all_metrics(sample, gt, dt, mode));
  }

  if (joint_by_ade) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < per_sample.size(); ++i) {
      if (per_sample[i].ade < per_sample[best].ade) best = i;
    }
    return per_sample[best];
  }

  TrajectoryMetrics out = per_sample.front();
  for (std::size_t i = 1; i < per_sample.size(); ++i) {
    out.ade = std::min(out.ade, per_sample[i].ade);
    out.fde = std::min(out.fde, per_sample[i].fde);
    out.mhd = std::min(out.mhd, per_sample[i].mhd);
    out.se = std::min(out.se, per_sample[i].se);
    if (per_sample[i].he.has_value()) {
      out.he = out.he.has_value() ? std::min(*out.he, *per_sample[i].he) : per_sample[i].he;
    }
  }
  return out;
}

}  // namespace colgrid
