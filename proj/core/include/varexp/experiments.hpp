#pragma once

#include <string>
#include <vector>

#include "varexp/spaces.hpp"

namespace varexp {

/// s-sweep of the fractional modular against the local limit
/// int_Om K_{n,pbar(x)} |grad u|^{pbar(x)} dx, with convergence
/// diagnostics and Richardson extrapolation in (1-s).
struct SweepReport {
  std::vector<double> s_values;
  std::vector<ModularResult> modulars;
  ModularResult local_limit;
  std::vector<double> rel_errors;
  bool converging = false;  // rel_errors decreasing over the last 3 points
  double extrapolated_limit = 0.0;
  std::string warning;  // set when the exponent fails the log-Holder probe
  LogHolderReport log_holder;
};
SweepReport bbm_sweep(const ScalarField& u, const Domain& dom,
                      const ExponentField& p, const std::vector<double>& s_list,
                      const QuadratureSpec& spec, double log_holder_L = 10.0);

/// F_s(x) per point and s against the target K_{n,pbar(x)} |grad u(x)|^{pbar(x)}.
struct PointwiseRow {
  Point x{};
  double target = 0.0;
  std::vector<double> fs;
  std::vector<double> fs_errors;   // quadrature error estimates
  std::vector<double> abs_errors;  // |F_s - target|
  bool monotone = false;           // abs_errors nonincreasing in s
};
struct PointwiseTable {
  std::vector<double> s_values;
  std::vector<PointwiseRow> rows;
};
PointwiseTable pointwise_limit_study(const ScalarField& u,
                                     const std::vector<Point>& points,
                                     const Domain& dom, const ExponentField& p,
                                     const std::vector<double>& s_list,
                                     const QuadratureSpec& spec);

/// Majorant audit for F_s: fit C at the smallest s against the shape
/// C min{R^{-n-s0 p-}, |x|^{-n-s0 p-}} and verify larger s never exceed
/// it (within 3x error estimates). Far points also yield a fitted decay
/// exponent.
struct MajorantRow {
  Point x{};
  double shape = 0.0;  // min(R^{-n-s0 p-}, |x|^{-n-s0 p-})
  std::vector<double> fs;
  std::vector<double> fs_errors;
  bool bounded = false;
};
struct MajorantReport {
  double s0 = 0.5;
  double truncation_radius = 0.0;  // R with supp u inside B_{R/2}
  double fitted_C = 0.0;
  std::vector<double> s_values;
  std::vector<MajorantRow> rows;
  bool all_bounded = false;
  double decay_exponent = 0.0;  // log-log fit over points with |x| > R
  int far_points = 0;
};
MajorantReport majorant_check(const ScalarField& u, const Domain& dom,
                              const ExponentField& p, double s0,
                              const std::vector<double>& s_list,
                              const std::vector<Point>& sample_points,
                              const QuadratureSpec& spec);

/// The section-4 counterexample: a field in W^{1,pbar} whose fractional
/// modular diverges logarithmically as the origin cutoff shrinks.
enum class DivergenceVerdict { diverges_log, inconclusive };
struct DivergenceReport {
  int n = 2;
  double q = 1.5;
  double pbar = 7.0 / 6.0;
  double pinf = 4.0;
  double s = 0.5;
  std::vector<double> cutoffs;
  std::vector<ModularResult> modulars;
  double slope_vs_log = 0.0;  // least-squares slope against log(1/eps)
  std::vector<double> decade_slopes;
  ModularResult sobolev_modular;  // finite reference, cutoff-independent
  bool luxemburg_not_in_space = false;
  DivergenceVerdict verdict = DivergenceVerdict::inconclusive;
};
DivergenceReport counterexample_run(int n, double q, double pbar, double pinf,
                                    const std::vector<double>& eps_list, double s,
                                    const QuadratureSpec& spec);

/// The counterexample exponent profile: pbar at 0, pinf for r >= 1,
/// monotone quintic smoothstep in between.
ExponentField counterexample_exponent(int n, double pbar, double pinf);

}  // namespace varexp
