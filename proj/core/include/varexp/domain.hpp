#pragma once

#include <cstdint>
#include <vector>

#include "varexp/point.hpp"

namespace varexp {

enum class Shape { interval, box, ball, annulus };

/// A bounded region of R^n, n in {1,2,3}. Balls and annuli are centered
/// at the origin; boxes are axis-aligned. An annulus is ball(r_outer)
/// minus the closed ball(r_inner), which also covers the "ball minus
/// ball" shape.
struct Domain {
  int dimension = 1;
  Shape shape = Shape::interval;
  Point lo{};  // interval/box bounds
  Point hi{};
  double r_inner = 0.0;  // ball/annulus radii
  double r_outer = 0.0;

  bool contains(const Point& x) const;
  double volume() const;
  /// Euclidean distance from an interior point to the boundary;
  /// 0 for points outside.
  double distance_to_boundary(const Point& x) const;
  /// Radius of the smallest origin-centered ball containing the domain.
  double outer_radius() const;

  static Domain interval(double a, double b);
  static Domain box(int n, const Point& lo, const Point& hi);
  static Domain ball(int n, double radius);
  static Domain annulus(int n, double inner, double outer);
};

/// Maximal sub-intervals of {rho > 0 : x + rho*w in dom}, optionally with
/// an origin-centered ball of radius `excise_origin` removed from the
/// domain. At most three intervals for the supported shapes.
struct RaySegment {
  double lo = 0.0;
  double hi = 0.0;
};
std::vector<RaySegment> ray_segments(const Domain& dom, const Point& x,
                                     const Point& direction,
                                     double excise_origin = 0.0);

/// One cell of a deterministic decomposition. Interval/box domains (and
/// all 1-d shapes) use cartesian parameter coordinates; balls and annuli
/// in 2-d/3-d use polar parameters (r, theta) resp. (r, mu = cos(polar
/// angle), theta), under which every cell has an exact closed-form
/// measure and no clipping is needed.
enum class CellCoords { cartesian, polar2, polar3 };

struct Cell {
  std::uint32_t id = 0;
  CellCoords coords = CellCoords::cartesian;
  int dimension = 1;
  std::array<double, 3> param_lo{};
  std::array<double, 3> param_hi{};
  double measure = 0.0;
  bool near_singularity = false;  // closure touches the origin

  Point center() const;
  /// Physical point for parameter coordinates inside this cell's system.
  Point to_physical(const std::array<double, 3>& param) const;
  /// Jacobian of the parameter map at `param` (1, r, or r^2).
  double jacobian(const std::array<double, 3>& param) const;
};

/// Deterministic partition of the domain into at most (2^level)^n cells.
/// Annuli with r_outer/r_inner >= 16 use log-spaced radial splits so that
/// thin inner shells are resolved.
std::vector<Cell> cell_decomposition(const Domain& dom, int level);

/// Split a cell into children (2 per axis; the radial axis of a polar
/// cell with param_lo[0] == 0 splits at r_hi/2^grading instead of the
/// midpoint, and positive radial ranges wider than a factor 4 split at
/// the geometric mean). Children get ids from *next_id.
std::vector<Cell> split_cell(const Cell& cell, std::uint32_t* next_id,
                             double grading = 1.0);

}  // namespace varexp
