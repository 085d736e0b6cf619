#pragma once

#include <functional>
#include <optional>

#include "varexp/quadrature.hpp"

namespace varexp {

/// K_{n,p} = (1/p) int_{S^{n-1}} |omega_n|^p dH^{n-1}
///         = 2 pi^{(n-1)/2} Gamma((p+1)/2) / Gamma((n+p)/2) / p,
/// computed both ways. Construction fails if the two routes disagree by
/// more than 1e-6 relative (that signals a quadrature or gamma bug).
struct KConstant {
  int n = 1;
  double p = 2.0;
  double value_gamma = 0.0;
  double value_sphere = 0.0;
};
KConstant k_constant(int n, double p, int sphere_order = 0);

/// Gamma closed form alone; used as the per-node weight K_{n, qbar(x)}.
double k_constant_gamma(int n, double p);

using DiagonalExponent = std::function<double(const Point&)>;

/// rho_{q(.)}(u) = int_Om |u(x)|^{q(x)} dx.
ModularResult lebesgue_modular(const ScalarField& u, const Domain& dom,
                               const DiagonalExponent& qbar,
                               const QuadratureSpec& spec);

/// int_Om |grad u|^{q(x)} dx, unweighted and weighted by K_{n,q(x)}.
/// Singular-radial fields must satisfy q * qbar < n near the origin
/// (the integrability half of 1 < pbar < n/q); otherwise this throws.
struct SobolevModular {
  ModularResult unweighted;
  ModularResult weighted;
};
SobolevModular sobolev_modular(const ScalarField& u, const Domain& dom,
                               const DiagonalExponent& qbar,
                               const QuadratureSpec& spec);

enum class NormStatus { ok, zero, not_in_space };

struct NormResult {
  double norm = 0.0;
  double modular_at_norm = 0.0;
  int bisection_iters = 0;
  NormStatus status = NormStatus::ok;
};

/// Luxemburg norm inf{lambda > 0 : modular(u/lambda) <= 1} by geometric
/// bracket expansion plus bisection in log(lambda). modular_fn(lambda)
/// must be the modular of u/lambda, nonincreasing in lambda. Returns
/// status zero when the modular stays <= 1 down to lambda = 1e-12, and
/// not_in_space when it stays above 1 (or infinite) up to 1e12.
NormResult luxemburg(const std::function<double(double)>& modular_fn, double tol);

/// Luxemburg norm of u in L^{qbar(.)}, reusing one frozen quadrature
/// structure across the bisection so the modular is exactly monotone in
/// lambda.
NormResult lebesgue_norm(const ScalarField& u, const Domain& dom,
                         const DiagonalExponent& qbar, const QuadratureSpec& spec,
                         double tol = 1e-6);

/// Gagliardo seminorm [u]_{s,p(.,.)} via the fractional modular, frozen
/// structure as above.
NormResult fractional_seminorm(const ScalarField& u, const Domain& dom, double s,
                               const ExponentField& p, const QuadratureSpec& spec,
                               double tol = 1e-6,
                               std::optional<double> inner_cutoff = {});

/// min{[u]^{p+}, [u]^{p-}} <= rho_{s,p}(u) <= max{[u]^{p+}, [u]^{p-}},
/// checked within 3x the combined error estimates.
struct SandwichReport {
  double modular = 0.0;
  double modular_error = 0.0;
  double seminorm = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double slack = 0.0;  // allowed overshoot, 3x combined errors
  bool holds = false;
  NormResult norm_result;
};
SandwichReport sandwich_check(const ScalarField& u, const Domain& dom, double s,
                              const ExponentField& p, const QuadratureSpec& spec,
                              double norm_tol = 1e-6);

}  // namespace varexp
