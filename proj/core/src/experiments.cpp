#include "varexp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "varexp/fields.hpp"

namespace varexp {

namespace {

bool decreasing_tail(const std::vector<double>& v, std::size_t count) {
  if (v.size() < count) return false;
  for (std::size_t i = v.size() - count; i + 1 < v.size(); ++i)
    if (!(v[i + 1] < v[i])) return false;
  return true;
}

// Richardson step assuming value(s) ~ V + C (1-s), from the last two
// sweep points. A heuristic: the limit is proven, a rate is not.
double extrapolate_last_two(const std::vector<double>& s,
                            const std::vector<double>& v) {
  if (s.empty()) return 0.0;
  if (s.size() == 1) return v.back();
  const double e1 = 1.0 - s[s.size() - 2];
  const double e2 = 1.0 - s[s.size() - 1];
  if (e1 == e2) return v.back();
  return (v.back() * e1 - v[v.size() - 2] * e2) / (e1 - e2);
}

double quintic_smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double denom = m * sxx - sx * sx;
  if (denom != 0.0) {
    f.slope = (m * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / m;
  }
  return f;
}

}  // namespace

SweepReport bbm_sweep(const ScalarField& u, const Domain& dom,
                      const ExponentField& p, const std::vector<double>& s_list,
                      const QuadratureSpec& spec, double log_holder_L) {
  if (s_list.empty()) throw std::invalid_argument("bbm_sweep requires s values");
  if (u.smoothness == Smoothness::singular_radial)
    throw std::invalid_argument(
        "bbm_sweep requires a C^2_c or Lipschitz field; use counterexample_run "
        "for singular fields");

  SweepReport rep;
  rep.s_values = s_list;

  rep.log_holder = check_log_holder(p, dom, log_holder_L,
                                    default_sampling_grid(dom));
  if (rep.log_holder.verdict != LogHolderVerdict::bounded_by_L)
    rep.warning =
        "exponent failed the log-Holder probe (max_ratio=" +
        std::to_string(rep.log_holder.max_ratio) +
        "); the convergence hypothesis does not hold, sweep is illustrative";

  const DiagonalExponent qbar = [&p](const Point& x) { return p.trace(x); };
  rep.local_limit = sobolev_modular(u, dom, qbar, spec).weighted;

  rep.modulars.reserve(s_list.size());
  for (double s : s_list)
    rep.modulars.push_back(fractional_modular(u, dom, s, p, spec));

  rep.rel_errors.reserve(s_list.size());
  for (const auto& m : rep.modulars) {
    if (rep.local_limit.value == 0.0)
      rep.rel_errors.push_back(m.value == 0.0
                                   ? 0.0
                                   : std::numeric_limits<double>::infinity());
    else
      rep.rel_errors.push_back(std::abs(m.value - rep.local_limit.value) /
                               rep.local_limit.value);
  }
  rep.converging = decreasing_tail(rep.rel_errors, 3);

  std::vector<double> vals;
  for (const auto& m : rep.modulars) vals.push_back(m.value);
  rep.extrapolated_limit = extrapolate_last_two(rep.s_values, vals);
  return rep;
}

PointwiseTable pointwise_limit_study(const ScalarField& u,
                                     const std::vector<Point>& points,
                                     const Domain& dom, const ExponentField& p,
                                     const std::vector<double>& s_list,
                                     const QuadratureSpec& spec) {
  if (points.empty() || s_list.empty())
    throw std::invalid_argument("pointwise study requires points and s values");
  if (u.smoothness != Smoothness::c2c)
    throw std::invalid_argument("pointwise limit study requires a C^2_c field");

  PointwiseTable table;
  table.s_values = s_list;
  const int n = dom.dimension;
  for (const Point& x : points) {
    PointwiseRow row;
    row.x = x;
    const double pbar = p.trace(x);
    const double g = norm(u.gradient(x));
    row.target = g == 0.0 ? 0.0 : k_constant_gamma(n, pbar) * std::pow(g, pbar);
    for (double s : s_list) {
      const ModularResult fs = pointwise_fs(u, x, dom, s, p, spec);
      row.fs.push_back(fs.value);
      row.fs_errors.push_back(fs.error_estimate);
      row.abs_errors.push_back(std::abs(fs.value - row.target));
    }
    row.monotone = true;
    for (std::size_t i = 0; i + 1 < row.abs_errors.size(); ++i)
      if (row.abs_errors[i + 1] > row.abs_errors[i]) row.monotone = false;
    table.rows.push_back(std::move(row));
  }
  return table;
}

MajorantReport majorant_check(const ScalarField& u, const Domain& dom,
                              const ExponentField& p, double s0,
                              const std::vector<double>& s_list,
                              const std::vector<Point>& sample_points,
                              const QuadratureSpec& spec) {
  if (sample_points.empty())
    throw std::invalid_argument("majorant check requires sample points");
  for (double s : s_list)
    if (s < s0) throw std::invalid_argument("majorant check requires s >= s0");

  MajorantReport rep;
  rep.s0 = s0;
  rep.s_values = s_list;
  const int n = dom.dimension;
  const double R = std::isfinite(u.support_radius)
                       ? std::max(2.0, 2.0 * u.support_radius)
                       : std::max(2.0, 2.0 * dom.outer_radius());
  rep.truncation_radius = R;
  const double decay = n + s0 * p.p_minus;

  auto shape = [&](const Point& x) {
    const double r = norm(x);
    return std::min(std::pow(R, -decay),
                    r > 0.0 ? std::pow(r, -decay) : std::pow(R, -decay));
  };

  // Fit C once at the smallest s.
  std::vector<double> f0(sample_points.size());
  for (std::size_t i = 0; i < sample_points.size(); ++i)
    f0[i] = pointwise_fs(u, sample_points[i], dom, s0, p, spec).value;
  double C = 0.0;
  for (std::size_t i = 0; i < sample_points.size(); ++i)
    C = std::max(C, f0[i] / shape(sample_points[i]));
  rep.fitted_C = C;

  rep.all_bounded = true;
  for (std::size_t i = 0; i < sample_points.size(); ++i) {
    MajorantRow row;
    row.x = sample_points[i];
    row.shape = shape(sample_points[i]);
    row.bounded = true;
    for (double s : s_list) {
      const ModularResult fs = pointwise_fs(u, sample_points[i], dom, s, p, spec);
      row.fs.push_back(fs.value);
      row.fs_errors.push_back(fs.error_estimate);
      if (fs.value > C * row.shape + 3.0 * fs.error_estimate) row.bounded = false;
    }
    rep.all_bounded = rep.all_bounded && row.bounded;
    rep.rows.push_back(std::move(row));
  }

  // Far-field decay fit at s0 over points beyond the truncation radius.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sample_points.size(); ++i) {
    const double r = norm(sample_points[i]);
    if (r > R && f0[i] > 0.0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(f0[i]));
    }
  }
  rep.far_points = static_cast<int>(lx.size());
  rep.decay_exponent = lx.size() >= 2 ? least_squares(lx, ly).slope
                                      : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

ExponentField counterexample_exponent(int n, double pbar, double pinf) {
  if (!(pbar > 1.0) || !(pinf >= pbar))
    throw std::invalid_argument("counterexample exponent requires 1 < pbar <= pinf");
  auto profile = [pbar, pinf](double r) {
    return pbar + (pinf - pbar) * quintic_smoothstep(r);
  };
  return make_radial_exponent(profile, n);
}

DivergenceReport counterexample_run(int n, double q, double pbar, double pinf,
                                    const std::vector<double>& eps_list, double s,
                                    const QuadratureSpec& spec) {
  if (!(q > 1.0) || !(q < n))
    throw std::invalid_argument("counterexample requires q in (1, n)");
  if (!(pbar > 1.0) || !(pbar < n / q))
    throw std::invalid_argument("counterexample condition 1 < pbar < n/q fails: pbar=" +
                                std::to_string(pbar) + ", n/q=" + std::to_string(n / q));
  if (!(pinf >= n / (q - 1.0)))
    throw std::invalid_argument(
        "counterexample condition p(r) >= n/(q-1) for r >= 1 fails: pinf=" +
        std::to_string(pinf) + ", n/(q-1)=" + std::to_string(n / (q - 1.0)));
  if (eps_list.empty())
    throw std::invalid_argument("counterexample requires cutoff values");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (!(eps_list[i + 1] < eps_list[i]))
      throw std::invalid_argument("cutoffs must be strictly decreasing");

  DivergenceReport rep;
  rep.n = n;
  rep.q = q;
  rep.pbar = pbar;
  rep.pinf = pinf;
  rep.s = s;
  rep.cutoffs = eps_list;

  const ScalarField u = counterexample_field(q, n);
  const ExponentField p = counterexample_exponent(n, pbar, pinf);
  const Domain dom = Domain::ball(n, 8.0);

  // Finite reference: the W^{1,pbar} membership side, cutoff-free. The
  // gradient power is integrable through the origin, so this number does
  // not move with the sweep cutoffs.
  const DiagonalExponent qbar = [pbar](const Point&) { return pbar; };
  rep.sobolev_modular = sobolev_modular(u, dom, qbar, spec).unweighted;

  for (double eps : eps_list)
    rep.modulars.push_back(fractional_modular(u, dom, s, p, spec, eps));

  std::vector<double> logs, vals;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    logs.push_back(std::log(1.0 / eps_list[i]));
    vals.push_back(rep.modulars[i].value);
  }
  rep.slope_vs_log = least_squares(logs, vals).slope;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i)
    rep.decade_slopes.push_back((vals[i + 1] - vals[i]) / (logs[i + 1] - logs[i]));

  bool stable = rep.decade_slopes.size() >= 2;
  for (double ds : rep.decade_slopes)
    if (!(ds > 0.0)) stable = false;
  if (stable) {
    const double last = rep.decade_slopes.back();
    const double prev = rep.decade_slopes[rep.decade_slopes.size() - 2];
    stable = std::abs(last - prev) <= 0.2 * std::abs(last);
  }
  rep.verdict = stable ? DivergenceVerdict::diverges_log
                       : DivergenceVerdict::inconclusive;

  // The uncut modular bracket: the integrability audit reports +inf, so
  // the Luxemburg expansion runs off to lambda = 1e12 and signals
  // "not in space" -- exactly the Theorem 1.2 outcome.
  const FractionalPlan uncut = plan_fractional(u, dom, s, p, spec);
  const NormResult nr = luxemburg(
      [&](double lambda) {
        return fractional_with_plan(uncut, scaled(u, 1.0 / lambda)).value;
      },
      1e-6);
  rep.luxemburg_not_in_space = nr.status == NormStatus::not_in_space;
  return rep;
}

}  // namespace varexp
