#include "varexp/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varexp {

Point ScalarField::gradient(const Point& x) const {
  if (grad) return grad(x);
  // Central differences with one Richardson refinement:
  // (4 FD_{h/2} - FD_h) / 3 cancels the O(h^2) term.
  Point g{};
  for (int i = 0; i < dimension; ++i) {
    auto fd = [&](double h) {
      Point xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      return (value(xp) - value(xm)) / (2.0 * h);
    };
    const double coarse = fd(fd_step);
    const double fine = fd(0.5 * fd_step);
    g[i] = (4.0 * fine - coarse) / 3.0;
  }
  return g;
}

ScalarField bump(int n, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("bump requires radius > 0");
  if (n < 1 || n > 3) throw std::invalid_argument("bump dimension must be 1, 2 or 3");
  const double r2 = radius * radius;
  ScalarField f;
  f.value = [r2](const Point& x) {
    const double t = dot(x, x) / r2;
    if (t >= 1.0) return 0.0;
    return std::exp(1.0 / (t - 1.0));
  };
  f.grad = [r2](const Point& x) {
    const double t = dot(x, x) / r2;
    if (t >= 1.0) return Point{};
    const double u = std::exp(1.0 / (t - 1.0));
    const double d = t - 1.0;
    return (-2.0 * u / (r2 * d * d)) * x;
  };
  f.support_radius = radius;
  f.smoothness = Smoothness::c2c;
  f.dimension = n;
  return f;
}

ScalarField linear_field() {
  ScalarField f;
  f.value = [](const Point& x) { return x[0]; };
  f.grad = [](const Point&) { return Point{1.0, 0.0, 0.0}; };
  f.support_radius = std::numeric_limits<double>::infinity();
  f.smoothness = Smoothness::c2c;
  f.dimension = 1;
  return f;
}

ScalarField tent_field(int n, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("tent requires radius > 0");
  if (n < 1 || n > 3) throw std::invalid_argument("tent dimension must be 1, 2 or 3");
  ScalarField f;
  f.value = [radius](const Point& x) {
    return std::max(0.0, 1.0 - norm(x) / radius);
  };
  f.grad = [radius](const Point& x) {
    const double r = norm(x);
    if (r == 0.0 || r >= radius) return Point{};
    return (-1.0 / (radius * r)) * x;
  };
  f.support_radius = radius;
  f.smoothness = Smoothness::lipschitz;
  f.dimension = n;
  f.radial_breaks = {radius};
  return f;
}

namespace {

// phi on [1,2] as a cubic Hermite in s = t-1: phi = h00(s) + (1-q) h10(s).
// For q in (1,3) this is monotone decreasing with values in [0,1]; the
// clamp only guards rounding.
double blend_value(double s, double q) {
  const double h00 = (2.0 * s - 3.0) * s * s + 1.0;
  const double h10 = ((s - 2.0) * s + 1.0) * s;
  return std::clamp(h00 + (1.0 - q) * h10, 0.0, 1.0);
}

double blend_deriv(double s, double q) {
  const double dh00 = 6.0 * s * (s - 1.0);
  const double dh10 = (3.0 * s - 4.0) * s + 1.0;
  return dh00 + (1.0 - q) * dh10;
}

double phi_value(double t, double q) {
  if (t <= 0.0) return std::numeric_limits<double>::infinity();
  if (t <= 1.0) return std::pow(t, 1.0 - q);
  if (t >= 2.0) return 0.0;
  return blend_value(t - 1.0, q);
}

double phi_deriv(double t, double q) {
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  if (t <= 1.0) return (1.0 - q) * std::pow(t, -q);
  if (t >= 2.0) return 0.0;
  return blend_deriv(t - 1.0, q);
}

}  // namespace

ScalarField counterexample_field(double q, int n) {
  if (n < 2 || n > 3)
    throw std::invalid_argument("counterexample field requires n in {2, 3}");
  if (!(q > 1.0) || !(q < n))
    throw std::invalid_argument(
        "counterexample field requires q in (1, n); otherwise 1 < pbar < n/q "
        "is unsatisfiable");
  ScalarField f;
  f.value = [q](const Point& x) { return phi_value(norm(x), q); };
  f.grad = [q](const Point& x) {
    const double r = norm(x);
    if (r == 0.0) return Point{};  // singular point; callers avoid it
    return (phi_deriv(r, q) / r) * x;
  };
  f.support_radius = 2.0;
  f.smoothness = Smoothness::singular_radial;
  f.dimension = n;
  f.singular_order = q - 1.0;
  f.radial_breaks = {1.0, 2.0};
  return f;
}

ScalarField scaled(const ScalarField& u, double c) {
  ScalarField f = u;
  auto value = u.value;
  f.value = [value, c](const Point& x) { return c * value(x); };
  if (u.grad) {
    auto grad = u.grad;
    f.grad = [grad, c](const Point& x) { return c * grad(x); };
  }
  return f;
}

ScalarField sum(const ScalarField& u, const ScalarField& v) {
  if (u.dimension != v.dimension)
    throw std::invalid_argument("field sum requires matching dimensions");
  ScalarField f;
  auto uv = u.value, vv = v.value;
  f.value = [uv, vv](const Point& x) { return uv(x) + vv(x); };
  if (u.grad && v.grad) {
    auto ug = u.grad, vg = v.grad;
    f.grad = [ug, vg](const Point& x) { return ug(x) + vg(x); };
  }
  f.support_radius = std::max(u.support_radius, v.support_radius);
  f.smoothness = std::max(u.smoothness, v.smoothness);
  f.dimension = u.dimension;
  f.singular_order = std::max(u.singular_order, v.singular_order);
  f.radial_breaks = u.radial_breaks;
  f.radial_breaks.insert(f.radial_breaks.end(), v.radial_breaks.begin(),
                         v.radial_breaks.end());
  std::sort(f.radial_breaks.begin(), f.radial_breaks.end());
  return f;
}

}  // namespace varexp
