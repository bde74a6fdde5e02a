#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mqe {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kVoidHeight = -std::numeric_limits<double>::infinity();
// Finite height stored for bodies that left the arena.
inline constexpr double kVoidDepth = -10.0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return {v.x * s, v.y * s}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
// Perpendicular (rotated +90 degrees).
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
constexpr double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

inline bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

/// Invalid user-supplied configuration such as an unknown task id or key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated runtime contract, e.g. non-finite state or a wrong buffer shape.
class Fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mqe
