#pragma once

#include <cmath>
#include <numbers>

namespace stlplan {

/// Point or displacement in the planar workspace (meters).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : y; }

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline Vec2 lerp(Vec2 a, Vec2 b, double s) { return a + (b - a) * s; }

inline Vec2 unit_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

}  // namespace stlplan
