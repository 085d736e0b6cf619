#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "varexp/point.hpp"

namespace varexp {

enum class Smoothness { c2c, lipschitz, singular_radial };

/// A scalar test function with gradient access. Fields are immutable
/// after construction and safe for concurrent evaluation.
struct ScalarField {
  std::function<double(const Point&)> value;
  /// Analytic gradient when available; gradient() falls back to central
  /// finite differences (step h, Richardson-refined) otherwise.
  std::function<Point(const Point&)> grad;
  double support_radius = std::numeric_limits<double>::infinity();
  Smoothness smoothness = Smoothness::c2c;
  int dimension = 1;
  /// For singular_radial fields: u ~ |x|^{-singular_order} near 0 and
  /// |grad u| ~ |x|^{-(singular_order+1)}.
  double singular_order = 0.0;
  /// Radii |x| at which the piecewise definition changes; quadrature
  /// places breakpoints there.
  std::vector<double> radial_breaks;
  double fd_step = 1e-4;

  Point gradient(const Point& x) const;
  bool has_analytic_gradient() const { return static_cast<bool>(grad); }
};

/// The standard C^2_c bump exp(1/(|x/radius|^2 - 1)) inside the ball of
/// the given radius, 0 outside. Analytic gradient.
ScalarField bump(int n, double radius);

/// u(x) = x[0] with unit gradient and unbounded support (n = 1). Only
/// meaningful over a bounded domain.
ScalarField linear_field();

/// Lipschitz tent max(0, 1 - |x|/radius). Kink at the origin and at the
/// support boundary; ships as the W^{1,p+} \cap W^{1,p-} stress case.
ScalarField tent_field(int n, double radius);

/// The radial profile phi(|x|) with phi(t) = t^{1-q} on (0,1], a cubic
/// Hermite blend on [1,2] matching phi(1)=1, phi'(1)=1-q, phi(2)=0,
/// phi'(2)=0 (monotone and within [0,1] for q < 3), and 0 beyond.
/// Requires q in (1, n).
ScalarField counterexample_field(double q, int n);

/// c * u, preserving metadata.
ScalarField scaled(const ScalarField& u, double c);

/// u + v (dimensions must agree; support/smoothness merged conservatively).
ScalarField sum(const ScalarField& u, const ScalarField& v);

}  // namespace varexp
