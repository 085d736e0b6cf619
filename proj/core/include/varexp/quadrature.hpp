#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "varexp/domain.hpp"
#include "varexp/exponent.hpp"
#include "varexp/fields.hpp"
#include "varexp/point.hpp"

namespace varexp {

struct QuadratureSpec {
  double rel_tol = 1e-7;
  double abs_tol = 1e-12;
  std::uint64_t max_evals = 100'000'000;
  int base_level = 3;
  /// Radial mesh grading toward singularities; the near-diagonal mesh is
  /// graded like rho ~ (k/K)^{grading/(1-s)} via a power substitution.
  double grading_exponent = 3.0;
  /// Largest admissible s for direct quadrature; beyond it the limit is
  /// obtained by sweep extrapolation.
  double s_cap = 0.999;
};

struct ModularResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::uint64_t evals = 0;
  std::string truncation_note;
};

/// Deterministic adaptive tensor Gauss-Legendre integral of f over dom.
/// Cells with the largest two-level error are refined first; the final
/// sum is a fixed-order pairwise reduction, so results are bit-identical
/// for any worker count. Set singular_origin when f has an integrable
/// singularity at the origin; cells touching it are pre-graded.
ModularResult integrate_domain(const std::function<double(const Point&)>& f,
                               const Domain& dom, const QuadratureSpec& spec,
                               bool singular_origin = false);

/// Frozen cell structure of an adaptive pass, reusable to evaluate a
/// family f_lambda with identical nodes (monotone in lambda by
/// construction; used by the Luxemburg bisection).
struct DomainPlan {
  Domain dom;
  std::vector<Cell> cells;
  double outer_error = 0.0;
};
DomainPlan plan_domain(const std::function<double(const Point&)>& f,
                       const Domain& dom, const QuadratureSpec& spec,
                       bool singular_origin = false);
ModularResult integrate_with_plan(const DomainPlan& plan,
                                  const std::function<double(const Point&)>& f);

/// Integral of g over the unit sphere S^{n-1}. n=1 sums the two points;
/// n=2 uses the periodic trapezoid rule with `order` nodes; n=3 uses
/// Gauss-Legendre in the polar angle (split at the equator) with `order`
/// nodes per hemisphere times a 2*order-node trapezoid in azimuth.
double integrate_sphere(const std::function<double(const Point&)>& g, int n,
                        int order);

/// The fractional modular
///   s(1-s) int_Om int_Om |u(x)-u(y)|^{p(x,y)} / |x-y|^{n+s p(x,y)} dy dx.
/// Inner integrals run in polar coordinates around each outer node with a
/// power-graded near-diagonal mesh and geometric far-field chunks; all
/// kernel powers are evaluated in log space.
///
/// Singular-radial u: pass inner_cutoff to excise the ball B_eps(0) from
/// the integration domain (both variables). Without a cutoff the routine
/// audits integrability; a divergent kernel yields value = +inf with an
/// explanatory note rather than a meaningless finite number.
///
/// swap_order integrates the transposed kernel (outer variable in the
/// second exponent slot); for symmetric p this is the same integral by
/// Fubini and serves as a consistency check.
ModularResult fractional_modular(const ScalarField& u, const Domain& dom,
                                 double s, const ExponentField& p,
                                 const QuadratureSpec& spec,
                                 std::optional<double> inner_cutoff = {},
                                 bool swap_order = false);

/// Frozen outer decomposition for scale sweeps u -> u/lambda.
struct FractionalPlan {
  Domain dom;
  double s = 0.5;
  ExponentField p;
  QuadratureSpec spec;
  double cutoff = 0.0;
  std::vector<Cell> cells;
  double outer_error = 0.0;
  bool divergent = false;  // integrability audit failed; value is +inf
  std::string note;
};
FractionalPlan plan_fractional(const ScalarField& u, const Domain& dom, double s,
                               const ExponentField& p, const QuadratureSpec& spec,
                               std::optional<double> inner_cutoff = {});
ModularResult fractional_with_plan(const FractionalPlan& plan,
                                   const ScalarField& u);

/// Pointwise F_s(x) = s(1-s) int_Om |u(x)-u(y)|^{p(x,y)}/|x-y|^{n+sp} dy.
/// x must lie in dom or outside the support of u.
ModularResult pointwise_fs(const ScalarField& u, const Point& x,
                           const Domain& dom, double s, const ExponentField& p,
                           const QuadratureSpec& spec);

}  // namespace varexp
