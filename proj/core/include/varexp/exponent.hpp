#pragma once

#include <functional>
#include <string>
#include <vector>

#include "varexp/domain.hpp"
#include "varexp/point.hpp"

namespace varexp {

enum class ExponentKind { constant, separable_radial, smooth_general };

/// A variable exponent p(x, y) with declared bounds 1 < p_minus <=
/// p(x,y) <= p_plus < inf. Evaluation must be pure; quadrature workers
/// call it concurrently. Symmetry in (x, y) is not assumed.
struct ExponentField {
  std::function<double(const Point&, const Point&)> evaluate;
  double p_minus = 0.0;
  double p_plus = 0.0;
  int dimension = 1;
  ExponentKind kind = ExponentKind::smooth_general;
  /// Set for separable_radial fields: evaluate(x,y) = radial_profile(|x-y|).
  std::function<double(double)> radial_profile;

  /// Diagonal trace p(x, x).
  double trace(const Point& x) const { return evaluate(x, x); }
};

/// Constant exponent p on R^n x R^n. Rejects p <= 1.
ExponentField make_constant_exponent(double p, int n);

/// Exponent depending only on |x-y|. The profile is sampled on a dense
/// deterministic range of distances to derive p_minus/p_plus and is
/// rejected if any sample leaves (1, inf).
ExponentField make_radial_exponent(std::function<double(double)> profile, int n,
                                   double max_distance = 64.0);

/// General smooth exponent with caller-declared bounds, spot-checked on
/// a deterministic sample of pairs.
ExponentField make_general_exponent(
    std::function<double(const Point&, const Point&)> evaluate, int n,
    double p_minus, double p_plus,
    ExponentKind kind = ExponentKind::smooth_general);

/// Centers and radii at which the log-Holder ratio is probed.
struct SamplingGrid {
  std::vector<Point> centers;
  std::vector<double> radii;
};

/// Deterministic default grid: a coarse lattice of interior centers and
/// geometric radii 1e-1 .. 1e-6.
SamplingGrid default_sampling_grid(const Domain& dom, int centers_per_axis = 5);

enum class LogHolderVerdict { bounded_by_L, violated, inconclusive };

/// Result of probing r^{-osc_{B_r(x)} p(x,.)} <= L over a finite grid.
/// The oscillation is estimated from finitely many samples of B_r(x),
/// so it can only be under-estimated: "violated" is a certificate while
/// "bounded_by_L" is evidence.
struct LogHolderReport {
  double max_ratio = 1.0;
  Point worst_point{};
  double worst_radius = 0.0;
  int sample_count = 0;
  int skipped = 0;  // (x, r) pairs with r >= min(dist(x, boundary), 1)
  LogHolderVerdict verdict = LogHolderVerdict::inconclusive;
};

/// Probe the log-Holder condition for p over the grid. Radii that reach
/// the boundary (or 1) are skipped and counted. Throws on an empty grid
/// or L < 1.
LogHolderReport check_log_holder(const ExponentField& p, const Domain& dom,
                                 double L, const SamplingGrid& grid);

}  // namespace varexp
