#include "varexp/exponent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace varexp {

namespace {

constexpr double kPi = std::numbers::pi;

void require_dim(int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("exponent dimension must be 1, 2 or 3");
}

// Radical-inverse (van der Corput) sequence; bases 2/3/5 give a fixed
// low-discrepancy sample of the unit cube.
double radical_inverse(unsigned i, unsigned base) {
  double inv = 1.0 / base, f = inv, x = 0.0;
  while (i > 0) {
    x += (i % base) * f;
    i /= base;
    f *= inv;
  }
  return x;
}

Point ball_sample(const Point& center, double r, int n, unsigned j) {
  const double u1 = radical_inverse(j + 1, 2);
  const double u2 = radical_inverse(j + 1, 3);
  const double u3 = radical_inverse(j + 1, 5);
  Point y = center;
  if (n == 1) {
    y[0] += r * (2.0 * u1 - 1.0);
  } else if (n == 2) {
    const double rad = r * std::sqrt(u1);
    y[0] += rad * std::cos(2.0 * kPi * u2);
    y[1] += rad * std::sin(2.0 * kPi * u2);
  } else {
    const double rad = r * std::cbrt(u1);
    const double mu = 2.0 * u2 - 1.0;
    const double rxy = rad * std::sqrt(std::max(0.0, 1.0 - mu * mu));
    y[0] += rxy * std::cos(2.0 * kPi * u3);
    y[1] += rxy * std::sin(2.0 * kPi * u3);
    y[2] += rad * mu;
  }
  return y;
}

}  // namespace

ExponentField make_constant_exponent(double p, int n) {
  require_dim(n);
  if (!(p > 1.0))
    throw std::invalid_argument("constant exponent requires p > 1");
  ExponentField f;
  f.evaluate = [p](const Point&, const Point&) { return p; };
  f.p_minus = p;
  f.p_plus = p;
  f.dimension = n;
  f.kind = ExponentKind::constant;
  f.radial_profile = [p](double) { return p; };
  return f;
}

ExponentField make_radial_exponent(std::function<double(double)> profile, int n,
                                   double max_distance) {
  require_dim(n);
  if (!profile) throw std::invalid_argument("radial exponent requires a profile");

  double pmin = std::numeric_limits<double>::infinity();
  double pmax = 0.0;
  auto probe = [&](double r) {
    const double v = profile(r);
    if (!std::isfinite(v) || v <= 1.0)
      throw std::invalid_argument("radial exponent profile leaves (1, inf) at r = " +
                                  std::to_string(r));
    pmin = std::min(pmin, v);
    pmax = std::max(pmax, v);
  };
  probe(0.0);
  for (int i = 0; i <= 512; ++i) probe(max_distance * i / 512.0);
  for (int i = 0; i <= 64; ++i) probe(std::pow(10.0, -9.0 + 9.0 * i / 64.0));

  ExponentField f;
  f.radial_profile = profile;
  f.evaluate = [profile](const Point& x, const Point& y) {
    return profile(distance(x, y));
  };
  f.p_minus = pmin;
  f.p_plus = pmax;
  f.dimension = n;
  f.kind = pmax - pmin == 0.0 ? ExponentKind::constant : ExponentKind::separable_radial;
  return f;
}

ExponentField make_general_exponent(
    std::function<double(const Point&, const Point&)> evaluate, int n,
    double p_minus, double p_plus, ExponentKind kind) {
  require_dim(n);
  if (!evaluate) throw std::invalid_argument("exponent requires an evaluator");
  if (!(p_minus > 1.0) || !(p_plus >= p_minus) || !std::isfinite(p_plus))
    throw std::invalid_argument("exponent bounds must satisfy 1 < p_minus <= p_plus < inf");

  // Spot-check the declared bounds on a fixed low-discrepancy pair sample.
  for (unsigned j = 0; j < 256; ++j) {
    const Point x = ball_sample(origin, 4.0, n, 2 * j);
    const Point y = ball_sample(origin, 4.0, n, 2 * j + 1);
    const double v = evaluate(x, y);
    if (!std::isfinite(v) || v < p_minus - 1e-9 || v > p_plus + 1e-9)
      throw std::invalid_argument("exponent sample violates declared bounds");
  }

  ExponentField f;
  f.evaluate = std::move(evaluate);
  f.p_minus = p_minus;
  f.p_plus = p_plus;
  f.dimension = n;
  f.kind = kind;
  return f;
}

SamplingGrid default_sampling_grid(const Domain& dom, int centers_per_axis) {
  SamplingGrid grid;
  const int n = dom.dimension;
  const double R = dom.outer_radius();
  Point lo{-R, -R, -R}, hi{R, R, R};
  if (dom.shape == Shape::interval || dom.shape == Shape::box) {
    lo = dom.lo;
    hi = dom.hi;
  }
  std::array<int, 3> idx{0, 0, 0};
  for (;;) {
    Point c{};
    for (int i = 0; i < n; ++i)
      c[i] = lo[i] + (idx[i] + 0.5) * (hi[i] - lo[i]) / centers_per_axis;
    if (dom.contains(c)) grid.centers.push_back(c);
    int axis = 0;
    while (axis < n && ++idx[axis] == centers_per_axis) idx[axis++] = 0;
    if (axis == n) break;
  }
  for (int k = 1; k <= 6; ++k) grid.radii.push_back(std::pow(10.0, -k));
  return grid;
}

LogHolderReport check_log_holder(const ExponentField& p, const Domain& dom,
                                 double L, const SamplingGrid& grid) {
  if (L < 1.0) throw std::invalid_argument("log-Holder bound L must be >= 1");
  if (grid.centers.empty() || grid.radii.empty())
    throw std::invalid_argument("log-Holder grid is empty");

  LogHolderReport rep;
  const int n = p.dimension;
  for (const Point& x : grid.centers) {
    const double d = dom.contains(x) ? dom.distance_to_boundary(x) : 0.0;
    for (double r : grid.radii) {
      if (!(r < std::min(d, 1.0))) {
        ++rep.skipped;
        continue;
      }
      // Oscillation of p(x, .) over B_r(x), estimated from the center,
      // 2n axis points at distance r, and 64 low-discrepancy points.
      double pmin = p.evaluate(x, x);
      double pmax = pmin;
      auto visit = [&](const Point& y) {
        const double v = p.evaluate(x, y);
        pmin = std::min(pmin, v);
        pmax = std::max(pmax, v);
      };
      for (int i = 0; i < n; ++i) {
        Point yp = x, ym = x;
        yp[i] += r;
        ym[i] -= r;
        visit(yp);
        visit(ym);
      }
      for (unsigned j = 0; j < 64; ++j) visit(ball_sample(x, r, n, j));

      const double osc = pmax - pmin;
      const double ratio = std::exp(-osc * std::log(r));
      ++rep.sample_count;
      if (ratio > rep.max_ratio) {
        rep.max_ratio = ratio;
        rep.worst_point = x;
        rep.worst_radius = r;
      }
    }
  }

  if (rep.sample_count == 0)
    rep.verdict = LogHolderVerdict::inconclusive;
  else if (rep.max_ratio > L)
    rep.verdict = LogHolderVerdict::violated;
  else
    rep.verdict = LogHolderVerdict::bounded_by_L;
  return rep;
}

}  // namespace varexp
