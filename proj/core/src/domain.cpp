#include "varexp/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace varexp {

namespace {

constexpr double kPi = std::numbers::pi;

double ball_volume(int n, double r) {
  switch (n) {
    case 1: return 2.0 * r;
    case 2: return kPi * r * r;
    default: return 4.0 / 3.0 * kPi * r * r * r;
  }
}

void require_dimension(int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("domain dimension must be 1, 2 or 3");
}

// Intersection of the ray {x + t w : t > 0} with the open ball |y| < R,
// as an interval [t0, t1]; empty if t1 <= t0.
RaySegment ray_ball(const Point& x, const Point& w, double R) {
  const double b = dot(x, w);
  const double c = dot(x, x) - R * R;
  const double disc = b * b - c;
  if (disc <= 0.0) return {0.0, 0.0};
  const double sq = std::sqrt(disc);
  double t0 = -b - sq;
  double t1 = -b + sq;
  t0 = std::max(t0, 0.0);
  if (t1 <= t0) return {0.0, 0.0};
  return {t0, t1};
}

std::vector<RaySegment> subtract_interval(const std::vector<RaySegment>& segs,
                                          const RaySegment& cut) {
  if (cut.hi <= cut.lo) return segs;
  std::vector<RaySegment> out;
  for (const auto& s : segs) {
    if (cut.hi <= s.lo || cut.lo >= s.hi) {
      out.push_back(s);
      continue;
    }
    if (cut.lo > s.lo) out.push_back({s.lo, cut.lo});
    if (cut.hi < s.hi) out.push_back({cut.hi, s.hi});
  }
  return out;
}

}  // namespace

Domain Domain::interval(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("interval requires a < b");
  Domain d;
  d.dimension = 1;
  d.shape = Shape::interval;
  d.lo = {a, 0, 0};
  d.hi = {b, 0, 0};
  return d;
}

Domain Domain::box(int n, const Point& lo, const Point& hi) {
  require_dimension(n);
  for (int i = 0; i < n; ++i)
    if (!(hi[i] > lo[i])) throw std::invalid_argument("box requires lo < hi per axis");
  Domain d;
  d.dimension = n;
  d.shape = n == 1 ? Shape::interval : Shape::box;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Domain Domain::ball(int n, double radius) {
  require_dimension(n);
  if (!(radius > 0)) throw std::invalid_argument("ball requires radius > 0");
  Domain d;
  d.dimension = n;
  d.shape = Shape::ball;
  d.r_outer = radius;
  return d;
}

Domain Domain::annulus(int n, double inner, double outer) {
  require_dimension(n);
  if (!(inner > 0) || !(outer > inner))
    throw std::invalid_argument("annulus requires 0 < inner < outer");
  Domain d;
  d.dimension = n;
  d.shape = Shape::annulus;
  d.r_inner = inner;
  d.r_outer = outer;
  return d;
}

bool Domain::contains(const Point& x) const {
  switch (shape) {
    case Shape::interval:
    case Shape::box:
      for (int i = 0; i < dimension; ++i)
        if (x[i] <= lo[i] || x[i] >= hi[i]) return false;
      return true;
    case Shape::ball:
      return norm(x) < r_outer;
    case Shape::annulus: {
      const double r = norm(x);
      return r > r_inner && r < r_outer;
    }
  }
  return false;
}

double Domain::volume() const {
  switch (shape) {
    case Shape::interval:
    case Shape::box: {
      double v = 1.0;
      for (int i = 0; i < dimension; ++i) v *= hi[i] - lo[i];
      return v;
    }
    case Shape::ball:
      return ball_volume(dimension, r_outer);
    case Shape::annulus:
      return ball_volume(dimension, r_outer) - ball_volume(dimension, r_inner);
  }
  return 0.0;
}

double Domain::distance_to_boundary(const Point& x) const {
  if (!contains(x)) return 0.0;
  switch (shape) {
    case Shape::interval:
    case Shape::box: {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dimension; ++i)
        d = std::min({d, x[i] - lo[i], hi[i] - x[i]});
      return d;
    }
    case Shape::ball:
      return r_outer - norm(x);
    case Shape::annulus: {
      const double r = norm(x);
      return std::min(r_outer - r, r - r_inner);
    }
  }
  return 0.0;
}

double Domain::outer_radius() const {
  switch (shape) {
    case Shape::interval:
    case Shape::box: {
      double m = 0.0;
      for (int i = 0; i < dimension; ++i)
        m += std::max(lo[i] * lo[i], hi[i] * hi[i]);
      return std::sqrt(m);
    }
    case Shape::ball:
    case Shape::annulus:
      return r_outer;
  }
  return 0.0;
}

std::vector<RaySegment> ray_segments(const Domain& dom, const Point& x,
                                     const Point& w, double excise_origin) {
  std::vector<RaySegment> segs;
  switch (dom.shape) {
    case Shape::interval:
    case Shape::box: {
      double t0 = 0.0;
      double t1 = std::numeric_limits<double>::infinity();
      for (int i = 0; i < dom.dimension; ++i) {
        if (w[i] == 0.0) {
          if (x[i] <= dom.lo[i] || x[i] >= dom.hi[i]) return {};
          continue;
        }
        double ta = (dom.lo[i] - x[i]) / w[i];
        double tb = (dom.hi[i] - x[i]) / w[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      }
      if (t1 > t0) segs.push_back({t0, t1});
      break;
    }
    case Shape::ball: {
      RaySegment s = ray_ball(x, w, dom.r_outer);
      if (s.hi > s.lo) segs.push_back(s);
      break;
    }
    case Shape::annulus: {
      RaySegment outer = ray_ball(x, w, dom.r_outer);
      if (outer.hi > outer.lo) {
        segs.push_back(outer);
        segs = subtract_interval(segs, ray_ball(x, w, dom.r_inner));
      }
      break;
    }
  }
  if (excise_origin > 0.0)
    segs = subtract_interval(segs, ray_ball(x, w, excise_origin));
  return segs;
}

Point Cell::to_physical(const std::array<double, 3>& p) const {
  switch (coords) {
    case CellCoords::cartesian:
      return {p[0], p[1], p[2]};
    case CellCoords::polar2:
      return {p[0] * std::cos(p[1]), p[0] * std::sin(p[1]), 0.0};
    case CellCoords::polar3: {
      const double rxy = p[0] * std::sqrt(std::max(0.0, 1.0 - p[1] * p[1]));
      return {rxy * std::cos(p[2]), rxy * std::sin(p[2]), p[0] * p[1]};
    }
  }
  return {};
}

double Cell::jacobian(const std::array<double, 3>& p) const {
  switch (coords) {
    case CellCoords::cartesian: return 1.0;
    case CellCoords::polar2: return p[0];
    case CellCoords::polar3: return p[0] * p[0];
  }
  return 1.0;
}

Point Cell::center() const {
  std::array<double, 3> mid{};
  for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (param_lo[i] + param_hi[i]);
  return to_physical(mid);
}

namespace {

int param_axes(const Cell& c) {
  switch (c.coords) {
    case CellCoords::cartesian: return c.dimension;
    case CellCoords::polar2: return 2;
    case CellCoords::polar3: return 3;
  }
  return 1;
}

double cell_measure(const Cell& c) {
  const auto& a = c.param_lo;
  const auto& b = c.param_hi;
  switch (c.coords) {
    case CellCoords::cartesian: {
      double v = 1.0;
      for (int i = 0; i < c.dimension; ++i) v *= b[i] - a[i];
      return v;
    }
    case CellCoords::polar2:
      return 0.5 * (b[0] * b[0] - a[0] * a[0]) * (b[1] - a[1]);
    case CellCoords::polar3:
      return (b[0] * b[0] * b[0] - a[0] * a[0] * a[0]) / 3.0 * (b[1] - a[1]) *
             (b[2] - a[2]);
  }
  return 0.0;
}

bool touches_origin(const Cell& c) {
  if (c.coords != CellCoords::cartesian) return c.param_lo[0] <= 0.0;
  for (int i = 0; i < c.dimension; ++i)
    if (c.param_lo[i] > 0.0 || c.param_hi[i] < 0.0) return false;
  return true;
}

Cell finish_cell(Cell c) {
  c.measure = cell_measure(c);
  c.near_singularity = touches_origin(c);
  return c;
}

void push_cartesian_grid(std::vector<Cell>& out, std::uint32_t* next_id, int n,
                         const Point& lo, const Point& hi, int divisions) {
  std::array<int, 3> idx{0, 0, 0};
  for (;;) {
    Cell c;
    c.id = (*next_id)++;
    c.coords = CellCoords::cartesian;
    c.dimension = n;
    for (int i = 0; i < n; ++i) {
      const double w = (hi[i] - lo[i]) / divisions;
      c.param_lo[i] = lo[i] + idx[i] * w;
      c.param_hi[i] = lo[i] + (idx[i] + 1) * w;
    }
    out.push_back(finish_cell(c));
    int axis = 0;
    while (axis < n && ++idx[axis] == divisions) idx[axis++] = 0;
    if (axis == n) break;
  }
}

std::vector<double> radial_splits(double r0, double r1, int divisions) {
  std::vector<double> r(divisions + 1);
  const bool log_spaced = r0 > 0.0 && r1 / r0 >= 16.0;
  for (int i = 0; i <= divisions; ++i) {
    const double t = static_cast<double>(i) / divisions;
    r[i] = log_spaced ? r0 * std::pow(r1 / r0, t) : r0 + t * (r1 - r0);
  }
  return r;
}

}  // namespace

std::vector<Cell> cell_decomposition(const Domain& dom, int level) {
  if (level < 0) throw std::invalid_argument("cell_decomposition requires level >= 0");
  const int divisions = 1 << level;
  std::vector<Cell> out;
  std::uint32_t next_id = 0;

  const bool radial_shape = dom.shape == Shape::ball || dom.shape == Shape::annulus;
  if (!radial_shape || dom.dimension == 1) {
    if (radial_shape) {
      // 1-d ball/annulus reduce to one or two intervals.
      if (dom.shape == Shape::ball) {
        push_cartesian_grid(out, &next_id, 1, {-dom.r_outer, 0, 0},
                            {dom.r_outer, 0, 0}, divisions);
      } else {
        push_cartesian_grid(out, &next_id, 1, {-dom.r_outer, 0, 0},
                            {-dom.r_inner, 0, 0}, divisions);
        push_cartesian_grid(out, &next_id, 1, {dom.r_inner, 0, 0},
                            {dom.r_outer, 0, 0}, divisions);
      }
    } else {
      push_cartesian_grid(out, &next_id, dom.dimension, dom.lo, dom.hi, divisions);
    }
    return out;
  }

  const auto rs = radial_splits(dom.r_inner, dom.r_outer, divisions);
  const int n = dom.dimension;
  for (int ir = 0; ir < divisions; ++ir) {
    for (int ia = 0; ia < divisions; ++ia) {
      if (n == 2) {
        Cell c;
        c.id = next_id++;
        c.coords = CellCoords::polar2;
        c.dimension = 2;
        c.param_lo = {rs[ir], 2.0 * kPi * ia / divisions, 0.0};
        c.param_hi = {rs[ir + 1], 2.0 * kPi * (ia + 1) / divisions, 0.0};
        out.push_back(finish_cell(c));
      } else {
        for (int ib = 0; ib < divisions; ++ib) {
          Cell c;
          c.id = next_id++;
          c.coords = CellCoords::polar3;
          c.dimension = 3;
          c.param_lo = {rs[ir], -1.0 + 2.0 * ia / divisions,
                        2.0 * kPi * ib / divisions};
          c.param_hi = {rs[ir + 1], -1.0 + 2.0 * (ia + 1) / divisions,
                        2.0 * kPi * (ib + 1) / divisions};
          out.push_back(finish_cell(c));
        }
      }
    }
  }
  return out;
}

std::vector<Cell> split_cell(const Cell& cell, std::uint32_t* next_id,
                             double grading) {
  const int axes = param_axes(cell);
  std::array<double, 3> mid{};
  for (int i = 0; i < axes; ++i)
    mid[i] = 0.5 * (cell.param_lo[i] + cell.param_hi[i]);

  // Radial axis of polar cells: grade toward the origin or split
  // geometrically so power-law integrands stay resolved.
  if (cell.coords != CellCoords::cartesian) {
    const double r0 = cell.param_lo[0];
    const double r1 = cell.param_hi[0];
    if (r0 <= 0.0) {
      mid[0] = r1 / std::pow(2.0, std::max(1.0, grading));
    } else if (r1 / r0 >= 4.0) {
      mid[0] = std::sqrt(r0 * r1);
    }
  } else if (cell.near_singularity && grading > 1.0) {
    // Cartesian cell touching the origin: grade the axis split points
    // toward zero.
    for (int i = 0; i < axes; ++i) {
      const double a = cell.param_lo[i];
      const double b = cell.param_hi[i];
      if (a < 0.0 && b > 0.0) continue;
      const double w = (b - a) / std::pow(2.0, grading);
      mid[i] = a >= 0.0 ? a + w : b - w;
    }
  }

  std::vector<Cell> children;
  children.reserve(std::size_t{1} << axes);
  for (int mask = 0; mask < (1 << axes); ++mask) {
    Cell ch = cell;
    ch.id = (*next_id)++;
    for (int i = 0; i < axes; ++i) {
      if (mask & (1 << i)) {
        ch.param_lo[i] = mid[i];
        ch.param_hi[i] = cell.param_hi[i];
      } else {
        ch.param_lo[i] = cell.param_lo[i];
        ch.param_hi[i] = mid[i];
      }
    }
    children.push_back(finish_cell(ch));
  }
  return children;
}

}  // namespace varexp
