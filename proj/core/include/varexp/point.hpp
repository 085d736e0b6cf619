#pragma once

#include <array>
#include <cmath>

namespace varexp {

/// A point in R^n for n <= 3. Unused trailing components stay zero, so
/// norms and dot products are safe to take over all three slots.
using Point = std::array<double, 3>;

inline constexpr Point origin{0.0, 0.0, 0.0};

inline double dot(const Point& a, const Point& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline Point operator+(const Point& a, const Point& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Point operator-(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Point operator*(double c, const Point& a) {
  return {c * a[0], c * a[1], c * a[2]};
}

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

}  // namespace varexp
