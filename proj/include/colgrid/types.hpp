#pragma once

#include <cmath>
#include <cstdint>

namespace colgrid {

/// Planar vector in meters (positions) or meters/second (velocities).
struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double squared_norm() const { return x * x + y * y; }
  double norm() const { return std::sqrt(squared_norm()); }

  Vec2 rotated(double angle_rad) const {
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    return {c * x - s * y, s * x + c * y};
  }
};

enum class AgentKind { Pedestrian, Vehicle };

/// One agent at one timestep: position plus the velocity derived from
/// successive positions.
struct AgentState {
  std::int64_t agent_id{0};
  AgentKind kind{AgentKind::Pedestrian};
  Vec2 position;
  Vec2 velocity;
};

}  // namespace colgrid
