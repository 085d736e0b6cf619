#include "varexp/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "varexp/fields.hpp"

namespace varexp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

int default_sphere_order(int n) {
  switch (n) {
    case 1: return 2;
    case 2: return 1 << 16;  // |sin|^p corners need a fine trapezoid
    default: return 400;
  }
}

}  // namespace

double k_constant_gamma(int n, double p) {
  return 2.0 * std::pow(kPi, 0.5 * (n - 1)) * std::tgamma(0.5 * (p + 1.0)) /
         std::tgamma(0.5 * (n + p)) / p;
}

KConstant k_constant(int n, double p, int sphere_order) {
  if (n < 1 || n > 3) throw std::invalid_argument("k_constant requires n in {1,2,3}");
  if (!(p > 1.0)) throw std::invalid_argument("k_constant requires p > 1");
  if (sphere_order <= 0) sphere_order = default_sphere_order(n);

  KConstant k;
  k.n = n;
  k.p = p;
  k.value_gamma = k_constant_gamma(n, p);
  k.value_sphere =
      integrate_sphere(
          [n, p](const Point& w) { return std::pow(std::abs(w[n - 1]), p); }, n,
          sphere_order) /
      p;
  const double rel = std::abs(k.value_gamma - k.value_sphere) / k.value_gamma;
  if (rel > 1e-6)
    throw std::runtime_error(
        "K constant routes disagree beyond 1e-6 relative (n=" + std::to_string(n) +
        ", p=" + std::to_string(p) + "): quadrature or gamma defect");
  return k;
}

ModularResult lebesgue_modular(const ScalarField& u, const Domain& dom,
                               const DiagonalExponent& qbar,
                               const QuadratureSpec& spec) {
  const bool singular = u.smoothness == Smoothness::singular_radial;
  auto value = u.value;
  return integrate_domain(
      [value, &qbar](const Point& x) {
        const double a = std::abs(value(x));
        if (a == 0.0) return 0.0;
        return std::pow(a, qbar(x));
      },
      dom, spec, singular);
}

SobolevModular sobolev_modular(const ScalarField& u, const Domain& dom,
                               const DiagonalExponent& qbar,
                               const QuadratureSpec& spec) {
  const bool singular = u.smoothness == Smoothness::singular_radial;
  if (singular) {
    // |grad u| ~ |x|^{-(a+1)} with a the singular order; |grad u|^q is
    // integrable iff (a+1) q < n. For the section-4 field a+1 = q, so
    // this is the integrability half of 1 < pbar < n/q.
    const double grad_order = u.singular_order + 1.0;
    double qmax = 0.0;
    for (double t : {1e-6, 1e-3, 1e-1})
      qmax = std::max(qmax, qbar(Point{t, 0.0, 0.0}));
    if (grad_order * qmax >= dom.dimension)
      throw std::invalid_argument(
          "gradient power not integrable: requires 1 < pbar < n/q");
  }

  const int n = dom.dimension;
  SobolevModular out;
  out.unweighted = integrate_domain(
      [&u, &qbar](const Point& x) {
        const double g = norm(u.gradient(x));
        if (g == 0.0) return 0.0;
        return std::pow(g, qbar(x));
      },
      dom, spec, singular);
  out.weighted = integrate_domain(
      [&u, &qbar, n](const Point& x) {
        const double g = norm(u.gradient(x));
        if (g == 0.0) return 0.0;
        const double q = qbar(x);
        return k_constant_gamma(n, q) * std::pow(g, q);
      },
      dom, spec, singular);
  return out;
}

NormResult luxemburg(const std::function<double(double)>& modular_fn, double tol) {
  constexpr double kLoMin = 1e-12;
  constexpr double kHiMax = 1e12;
  NormResult res;

  auto eval = [&](double lambda) {
    ++res.bisection_iters;
    return modular_fn(lambda);
  };

  double hi = 1e6;
  double m_hi = eval(hi);
  while (m_hi > 1.0 && hi < kHiMax) {
    hi *= 10.0;
    m_hi = eval(hi);
  }
  if (m_hi > 1.0) {
    res.status = NormStatus::not_in_space;
    res.norm = kInf;
    res.modular_at_norm = m_hi;
    return res;
  }

  double lo = 1e-6;
  double m_lo = eval(lo);
  while (m_lo <= 1.0 && lo > kLoMin) {
    lo /= 10.0;
    m_lo = eval(lo);
  }
  if (m_lo <= 1.0) {
    res.status = NormStatus::zero;
    res.norm = 0.0;
    res.modular_at_norm = m_lo;
    return res;
  }

  // Invariant: modular(lo) > 1 >= modular(hi); bisect in log(lambda).
  double best = hi, best_m = m_hi;
  for (int it = 0; it < 200 && res.bisection_iters < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double m = eval(mid);
    if (std::abs(m - 1.0) < std::abs(best_m - 1.0)) {
      best = mid;
      best_m = m;
    }
    if (std::abs(m - 1.0) <= tol) break;
    if (m > 1.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * hi) break;
  }
  res.norm = best;
  res.modular_at_norm = best_m;
  res.status = NormStatus::ok;
  return res;
}

NormResult lebesgue_norm(const ScalarField& u, const Domain& dom,
                         const DiagonalExponent& qbar, const QuadratureSpec& spec,
                         double tol) {
  const bool singular = u.smoothness == Smoothness::singular_radial;
  auto value = u.value;
  auto integrand = [value, &qbar](double lambda) {
    return [value, &qbar, lambda](const Point& x) {
      const double a = std::abs(value(x)) / lambda;
      if (a == 0.0) return 0.0;
      return std::pow(a, qbar(x));
    };
  };
  const DomainPlan plan = plan_domain(integrand(1.0), dom, spec, singular);
  return luxemburg(
      [&](double lambda) { return integrate_with_plan(plan, integrand(lambda)).value; },
      tol);
}

NormResult fractional_seminorm(const ScalarField& u, const Domain& dom, double s,
                               const ExponentField& p, const QuadratureSpec& spec,
                               double tol, std::optional<double> inner_cutoff) {
  const FractionalPlan plan = plan_fractional(u, dom, s, p, spec, inner_cutoff);
  return luxemburg(
      [&](double lambda) {
        return fractional_with_plan(plan, scaled(u, 1.0 / lambda)).value;
      },
      tol);
}

SandwichReport sandwich_check(const ScalarField& u, const Domain& dom, double s,
                              const ExponentField& p, const QuadratureSpec& spec,
                              double norm_tol) {
  SandwichReport rep;
  const FractionalPlan plan = plan_fractional(u, dom, s, p, spec);
  const ModularResult rho = fractional_with_plan(plan, u);
  rep.modular = rho.value;
  rep.modular_error = rho.error_estimate;

  rep.norm_result = luxemburg(
      [&](double lambda) {
        return fractional_with_plan(plan, scaled(u, 1.0 / lambda)).value;
      },
      norm_tol);

  if (rep.norm_result.status == NormStatus::zero) {
    rep.seminorm = 0.0;
    rep.lower = 0.0;
    rep.upper = 0.0;
    rep.slack = 3.0 * rep.modular_error + norm_tol;
    rep.holds = rep.modular <= rep.slack;
    return rep;
  }
  if (rep.norm_result.status == NormStatus::not_in_space) {
    rep.holds = false;
    return rep;
  }

  rep.seminorm = rep.norm_result.norm;
  const double a = std::pow(rep.seminorm, p.p_plus);
  const double b = std::pow(rep.seminorm, p.p_minus);
  rep.lower = std::min(a, b);
  rep.upper = std::max(a, b);

  // Error budget: quadrature error on the modular plus the propagated
  // Luxemburg tolerance |d lambda^p| <= p * lambda^p * (tol + rel err).
  const double rel_rho =
      rep.modular > 0.0 ? rep.modular_error / rep.modular : rep.modular_error;
  const double norm_rel = norm_tol * 10.0 + rel_rho;
  rep.slack = 3.0 * (rep.modular_error + rep.upper * p.p_plus * norm_rel);
  rep.holds = rep.modular >= rep.lower - rep.slack &&
              rep.modular <= rep.upper + rep.slack;
  return rep;
}

}  // namespace varexp
