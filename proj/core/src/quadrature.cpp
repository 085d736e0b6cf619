#include "varexp/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "varexp/reduce.hpp"

namespace varexp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [-1, 1], cached per order.

struct GLRule {
  std::vector<double> x;
  std::vector<double> w;
};

const GLRule& gl_rule(int order) {
  static std::map<int, GLRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  GLRule rule;
  rule.x.resize(order);
  rule.w.resize(order);
  const int m = (order + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(kPi * (i - 0.25) / (order + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = order * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.x[i - 1] = -z;
    rule.x[order - i] = z;
    rule.w[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.w[order - i] = rule.w[i - 1];
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

// ---------------------------------------------------------------------------
// Adaptive cell engine shared by all domain integrals.

struct NodeOut {
  double value = 0.0;
  double err = 0.0;
};
using NodeFn = std::function<NodeOut(const Point&)>;

int cell_axes(const Cell& c) {
  switch (c.coords) {
    case CellCoords::cartesian: return c.dimension;
    case CellCoords::polar2: return 2;
    case CellCoords::polar3: return 3;
  }
  return 1;
}

int cell_order(const Cell& c) {
  const int axes = cell_axes(c);
  if (axes == 1) return 10;
  if (axes == 2) return 6;
  return 4;
}

struct CellValue {
  double integral = 0.0;
  double node_err = 0.0;
};

CellValue eval_cell(const Cell& c, const NodeFn& fn) {
  const int axes = cell_axes(c);
  const GLRule& gl = gl_rule(cell_order(c));
  const int q = static_cast<int>(gl.x.size());

  std::array<double, 3> mid{}, half{};
  for (int a = 0; a < axes; ++a) {
    mid[a] = 0.5 * (c.param_lo[a] + c.param_hi[a]);
    half[a] = 0.5 * (c.param_hi[a] - c.param_lo[a]);
  }

  std::vector<double> contrib;
  contrib.reserve(static_cast<std::size_t>(std::pow(q, axes)));
  CellValue out;

  std::array<int, 3> idx{0, 0, 0};
  for (;;) {
    std::array<double, 3> p = mid;
    double wp = 1.0;
    for (int a = 0; a < axes; ++a) {
      p[a] = mid[a] + half[a] * gl.x[idx[a]];
      wp *= half[a] * gl.w[idx[a]];
    }
    const double w = wp * c.jacobian(p);
    const NodeOut o = fn(c.to_physical(p));
    if (!std::isfinite(o.value))
      throw std::runtime_error("integrand not finite at a quadrature node");
    contrib.push_back(w * o.value);
    out.node_err += std::abs(w) * o.err;

    int a = 0;
    while (a < axes && ++idx[a] == q) idx[a++] = 0;
    if (a == axes) break;
  }
  out.integral = pairwise_sum(contrib);
  return out;
}

// Graded radial pre-split of cells touching the origin, for integrands
// with an integrable singularity there.
std::vector<Cell> pre_grade(std::vector<Cell> cells, double grading,
                            std::uint32_t* next_id) {
  if (grading <= 1.0) return cells;
  constexpr int kPieces = 10;
  std::vector<Cell> out;
  for (const Cell& c : cells) {
    if (!c.near_singularity) {
      out.push_back(c);
      continue;
    }
    if (c.coords != CellCoords::cartesian) {
      const double r1 = c.param_hi[0];
      for (int k = 0; k < kPieces; ++k) {
        Cell piece = c;
        piece.id = (*next_id)++;
        piece.param_lo[0] = r1 * std::pow(static_cast<double>(k) / kPieces, grading);
        piece.param_hi[0] =
            r1 * std::pow(static_cast<double>(k + 1) / kPieces, grading);
        piece.measure = 0.0;  // engine never uses measures; keep cells light
        piece.near_singularity = piece.param_lo[0] <= 0.0;
        out.push_back(piece);
      }
    } else if (c.dimension == 1) {
      const double a = c.param_lo[0];
      const double b = c.param_hi[0];
      auto add_graded = [&](double from, double to) {
        // |from| may be 0; grade toward it.
        for (int k = 0; k < kPieces; ++k) {
          Cell piece = c;
          piece.id = (*next_id)++;
          const double t0 = std::pow(static_cast<double>(k) / kPieces, grading);
          const double t1 = std::pow(static_cast<double>(k + 1) / kPieces, grading);
          piece.param_lo[0] = std::min(from + t0 * (to - from), from + t1 * (to - from));
          piece.param_hi[0] = std::max(from + t0 * (to - from), from + t1 * (to - from));
          piece.near_singularity = piece.param_lo[0] <= 0.0 && piece.param_hi[0] >= 0.0;
          out.push_back(piece);
        }
      };
      if (a < 0.0 && b > 0.0) {
        add_graded(0.0, a);
        add_graded(0.0, b);
      } else if (a >= 0.0) {
        add_graded(a, b);  // singularity at a == 0
      } else {
        add_graded(b, a);
      }
    } else {
      out.push_back(c);  // boxes at the origin are left to the adaptive loop
    }
  }
  return out;
}

struct Record {
  Cell cell;
  double self = 0.0;
  std::vector<Cell> kids;
  std::vector<double> kid_vals;
  double kids_sum = 0.0;
  double node_err = 0.0;
  double err = 0.0;
  bool active = true;
};

struct EngineResult {
  double value = 0.0;
  double outer_err = 0.0;
  double node_err = 0.0;
  std::vector<Cell> leaves;
  bool budget_hit = false;
};

EngineResult adaptive_engine(std::vector<Cell> initial, const NodeFn& fn,
                             const QuadratureSpec& spec, double grading,
                             const std::function<bool()>& over_budget) {
  std::uint32_t next_id = 0;
  for (const Cell& c : initial) next_id = std::max(next_id, c.id + 1);

  std::vector<Record> recs;

  // Evaluate a batch of (cell, self-value) pairs into records: split each
  // cell, evaluate the children in parallel, derive the two-level error.
  auto expand = [&](const std::vector<Cell>& cells,
                    const std::vector<double>& selfs) {
    std::vector<Record> fresh(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      fresh[i].cell = cells[i];
      fresh[i].self = selfs[i];
      fresh[i].kids = split_cell(cells[i], &next_id,
                                 cells[i].near_singularity ? grading : 1.0);
      fresh[i].kid_vals.resize(fresh[i].kids.size());
    }
    struct Task {
      std::size_t rec;
      std::size_t kid;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < fresh.size(); ++i)
      for (std::size_t k = 0; k < fresh[i].kids.size(); ++k)
        tasks.push_back({i, k});
    std::vector<double> kid_nerrs(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t t) {
      const CellValue v = eval_cell(fresh[tasks[t].rec].kids[tasks[t].kid], fn);
      fresh[tasks[t].rec].kid_vals[tasks[t].kid] = v.integral;
      kid_nerrs[t] = v.node_err;
    });
    for (std::size_t t = 0; t < tasks.size(); ++t)
      fresh[tasks[t].rec].node_err += kid_nerrs[t];
    for (Record& r : fresh) {
      r.kids_sum = pairwise_sum(r.kid_vals);
      r.err = std::abs(r.self - r.kids_sum);
      recs.push_back(std::move(r));
    }
  };

  {
    std::vector<double> selfs(initial.size());
    parallel_for(initial.size(), [&](std::size_t i) {
      selfs[i] = eval_cell(initial[i], fn).integral;
    });
    expand(initial, selfs);
  }

  EngineResult out;
  constexpr int kMaxWaves = 400;
  constexpr int kBatch = 8;
  for (int wave = 0; wave < kMaxWaves; ++wave) {
    // Deterministic totals: contributions ordered by cell id.
    std::vector<const Record*> active;
    for (const Record& r : recs)
      if (r.active) active.push_back(&r);
    std::sort(active.begin(), active.end(),
              [](const Record* a, const Record* b) { return a->cell.id < b->cell.id; });
    std::vector<double> vals;
    vals.reserve(active.size());
    double outer_err = 0.0, node_err = 0.0;
    for (const Record* r : active) {
      vals.push_back(r->kids_sum);
      outer_err += r->err;
      node_err += r->node_err;
    }
    out.value = pairwise_sum(vals);
    out.outer_err = outer_err;
    out.node_err = node_err;

    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(out.value));
    if (outer_err <= tol) break;
    if (over_budget()) {
      out.budget_hit = true;
      break;
    }

    std::vector<Record*> worst;
    for (Record& r : recs)
      if (r.active) worst.push_back(&r);
    std::sort(worst.begin(), worst.end(), [](const Record* a, const Record* b) {
      if (a->err != b->err) return a->err > b->err;
      return a->cell.id < b->cell.id;
    });
    const int nb = std::min<std::size_t>(kBatch, worst.size());
    std::vector<Cell> cells;
    std::vector<double> selfs;
    for (int i = 0; i < nb; ++i) {
      worst[i]->active = false;
      for (std::size_t k = 0; k < worst[i]->kids.size(); ++k) {
        cells.push_back(worst[i]->kids[k]);
        selfs.push_back(worst[i]->kid_vals[k]);
      }
    }
    expand(cells, selfs);
  }

  for (const Record& r : recs)
    if (r.active)
      out.leaves.insert(out.leaves.end(), r.kids.begin(), r.kids.end());
  std::sort(out.leaves.begin(), out.leaves.end(),
            [](const Cell& a, const Cell& b) { return a.id < b.id; });
  return out;
}

std::vector<Cell> initial_cells(const Domain& dom, const QuadratureSpec& spec,
                                bool singular_origin) {
  std::vector<Cell> cells = cell_decomposition(dom, spec.base_level);
  if (singular_origin) {
    std::uint32_t next_id = 0;
    for (const Cell& c : cells) next_id = std::max(next_id, c.id + 1);
    cells = pre_grade(std::move(cells), std::max(1.5, spec.grading_exponent), &next_id);
  }
  return cells;
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain domain integrals.

ModularResult integrate_domain(const std::function<double(const Point&)>& f,
                               const Domain& dom, const QuadratureSpec& spec,
                               bool singular_origin) {
  std::atomic<std::uint64_t> evals{0};
  NodeFn node = [&](const Point& x) {
    evals.fetch_add(1, std::memory_order_relaxed);
    return NodeOut{f(x), 0.0};
  };
  auto res = adaptive_engine(
      initial_cells(dom, spec, singular_origin), node, spec, spec.grading_exponent,
      [&] { return evals.load(std::memory_order_relaxed) >= spec.max_evals; });
  ModularResult out;
  out.value = res.value;
  out.error_estimate = res.outer_err + res.node_err + 1e-16 * std::abs(res.value);
  out.evals = evals.load();
  if (res.budget_hit) out.truncation_note = "max_evals exceeded; estimate inconclusive";
  return out;
}

DomainPlan plan_domain(const std::function<double(const Point&)>& f,
                       const Domain& dom, const QuadratureSpec& spec,
                       bool singular_origin) {
  std::atomic<std::uint64_t> evals{0};
  NodeFn node = [&](const Point& x) {
    evals.fetch_add(1, std::memory_order_relaxed);
    return NodeOut{f(x), 0.0};
  };
  auto res = adaptive_engine(
      initial_cells(dom, spec, singular_origin), node, spec, spec.grading_exponent,
      [&] { return evals.load(std::memory_order_relaxed) >= spec.max_evals; });
  DomainPlan plan;
  plan.dom = dom;
  plan.cells = std::move(res.leaves);
  plan.outer_error = res.outer_err;
  return plan;
}

ModularResult integrate_with_plan(const DomainPlan& plan,
                                  const std::function<double(const Point&)>& f) {
  std::atomic<std::uint64_t> evals{0};
  NodeFn node = [&](const Point& x) {
    evals.fetch_add(1, std::memory_order_relaxed);
    return NodeOut{f(x), 0.0};
  };
  std::vector<double> vals(plan.cells.size());
  parallel_for(plan.cells.size(), [&](std::size_t i) {
    vals[i] = eval_cell(plan.cells[i], node).integral;
  });
  ModularResult out;
  out.value = pairwise_sum(vals);
  out.error_estimate = plan.outer_error + 1e-16 * std::abs(out.value);
  out.evals = evals.load();
  return out;
}

// ---------------------------------------------------------------------------
// Sphere integrals.

double integrate_sphere(const std::function<double(const Point&)>& g, int n,
                        int order) {
  if (n == 1) return g(Point{-1.0, 0.0, 0.0}) + g(Point{1.0, 0.0, 0.0});
  if (order < 4) throw std::invalid_argument("sphere order must be >= 4");
  if (n == 2) {
    std::vector<double> vals(order);
    const double h = 2.0 * kPi / order;
    for (int j = 0; j < order; ++j) {
      const double th = h * j;
      vals[j] = g(Point{std::cos(th), std::sin(th), 0.0});
    }
    return h * pairwise_sum(vals);
  }
  if (n == 3) {
    // Polar angle split at the equator (|omega_3|^p has a kink there),
    // Gauss-Legendre per hemisphere, trapezoid in azimuth.
    const GLRule& gl = gl_rule(order);
    const int naz = 2 * order;
    const double haz = 2.0 * kPi / naz;
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(2 * order) * naz);
    for (int half = 0; half < 2; ++half) {
      const double lo = half == 0 ? 0.0 : kPi / 2.0;
      const double hi = lo + kPi / 2.0;
      for (int i = 0; i < order; ++i) {
        const double phi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[i];
        const double wphi = 0.5 * (hi - lo) * gl.w[i] * std::sin(phi);
        for (int k = 0; k < naz; ++k) {
          const double th = haz * k;
          vals.push_back(wphi * haz *
                         g(Point{std::sin(phi) * std::cos(th),
                                 std::sin(phi) * std::sin(th), std::cos(phi)}));
        }
      }
    }
    return pairwise_sum(vals);
  }
  throw std::invalid_argument("integrate_sphere supports n in {1, 2, 3}");
}

// ---------------------------------------------------------------------------
// Fractional modular machinery.

namespace {

struct Dir {
  Point w;
  double weight;
};

std::vector<Dir> make_directions(int n, int order) {
  std::vector<Dir> dirs;
  if (n == 1) {
    dirs.push_back({{1.0, 0.0, 0.0}, 1.0});
    dirs.push_back({{-1.0, 0.0, 0.0}, 1.0});
  } else if (n == 2) {
    dirs.reserve(order);
    for (int j = 0; j < order; ++j) {
      const double th = 2.0 * kPi * (j + 0.5) / order;
      dirs.push_back({{std::cos(th), std::sin(th), 0.0}, 2.0 * kPi / order});
    }
  } else {
    const GLRule& gl = gl_rule(order);
    const int naz = 2 * order;
    for (int i = 0; i < order; ++i) {
      const double mu = gl.x[i];
      const double rxy = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      for (int k = 0; k < naz; ++k) {
        const double th = 2.0 * kPi * (k + 0.5) / naz;
        dirs.push_back({{rxy * std::cos(th), rxy * std::sin(th), mu},
                        gl.w[i] * 2.0 * kPi / naz});
      }
    }
  }
  return dirs;
}

struct InnerRule {
  std::vector<Dir> dirs;
  const GLRule* near_fine;
  const GLRule* near_coarse;
  const GLRule* far_fine;
  const GLRule* far_coarse;
  double octave = 4.0;
  int patch_angular = 16;
};

InnerRule make_inner_rule(int n, const QuadratureSpec& spec) {
  InnerRule r;
  const int base = std::clamp(spec.base_level, 0, 6);
  int angular = 2;
  if (n == 2) angular = std::max(16, 4 << base);
  if (n == 3) angular = std::max(6, 2 + 2 * base);
  r.dirs = make_directions(n, angular);
  r.near_fine = &gl_rule(24);
  r.near_coarse = &gl_rule(12);
  r.far_fine = &gl_rule(12);
  r.far_coarse = &gl_rule(6);
  r.patch_angular = n == 2 ? std::max(16, 4 << base) : (n == 3 ? 8 : 2);
  return r;
}

struct KernelCtx {
  const ScalarField* u;
  const ExponentField* p;
  const Domain* dom;
  double s;
  int n;
  double cutoff = 0.0;   // excised origin ball (0 = none)
  double r_floor = 0.0;  // quadrature floor for integrable singularities
  bool singular = false;
  bool transpose = false;
  std::atomic<std::uint64_t>* evals;
};

double eval_p(const KernelCtx& ctx, const Point& a, const Point& b) {
  const double v = ctx.transpose ? ctx.p->evaluate(b, a) : ctx.p->evaluate(a, b);
  if (std::isnan(v))
    throw std::runtime_error("exponent field returned NaN at pair (" +
                             std::to_string(a[0]) + "," + std::to_string(a[1]) +
                             ")-(" + std::to_string(b[0]) + "," +
                             std::to_string(b[1]) + ")");
  return v;
}

// Near-diagonal integral over [0, delta] along direction w, under the
// substitution tau = (rho/delta)^alpha with alpha = (1-s) pbar(x). For a
// diagonal-constant exponent the integrand is constant in tau, so the
// rule stays accurate uniformly as s -> 1. All powers in log space.
double near_field(const KernelCtx& ctx, const Point& x, double ux,
                  const Point& gx, const Dir& dir, double delta, double alpha,
                  const GLRule& gl) {
  const double s = ctx.s;
  const double ln_delta = std::log(delta);
  const double ln_alpha = std::log(alpha);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.x.size(); ++i) {
    const double tau = 0.5 * (gl.x[i] + 1.0);
    const double ln_tau = std::log(tau);
    const double ln_rho = ln_delta + ln_tau / alpha;
    const double rho = std::exp(ln_rho);
    ctx.evals->fetch_add(1, std::memory_order_relaxed);

    const Point y = x + rho * dir.w;
    const double pt = eval_p(ctx, x, y);
    double D;
    if (rho < 1e-6) {
      D = std::abs(dot(gx, dir.w));  // difference quotient limit
    } else {
      D = std::abs(ctx.u->value(y) - ux) / rho;
    }
    if (D <= 0.0) continue;
    const double expo = (1.0 - s) * pt * ln_delta - ln_alpha +
                        ln_tau * ((1.0 - s) * pt / alpha - 1.0) +
                        pt * std::log(D);
    sum += 0.5 * gl.w[i] * std::exp(expo);
  }
  return sum;
}

// Far-field integrand along a ray: |u(x)-u(x+rho w)|^p * rho^{-1-s p}
// (the rho^{n-1} polar Jacobian cancels n powers of the kernel).
double far_chunk(const KernelCtx& ctx, const Point& x, double ux, const Dir& dir,
                 double a, double b, const GLRule& gl) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.x.size(); ++i) {
    const double rho = mid + half * gl.x[i];
    ctx.evals->fetch_add(1, std::memory_order_relaxed);
    const Point y = x + rho * dir.w;
    const double diff = std::abs(ctx.u->value(y) - ux);
    if (diff <= 0.0) continue;
    const double pt = eval_p(ctx, x, y);
    sum += half * gl.w[i] *
           std::exp(pt * std::log(diff) - (1.0 + ctx.s * pt) * std::log(rho));
  }
  return sum;
}

double far_piece(const KernelCtx& ctx, const Point& x, double ux, const Dir& dir,
                 double a, double b, double octave, const GLRule& gl) {
  double total = 0.0;
  double lo = a;
  for (int guard = 0; guard < 120 && b / lo > octave; ++guard) {
    const double hi = lo * octave;
    total += far_chunk(ctx, x, ux, dir, lo, hi, gl);
    lo = hi;
  }
  total += far_chunk(ctx, x, ux, dir, lo, b, gl);
  return total;
}

// Roots of |x + rho w| = r inside (a, b); breakpoints where piecewise
// field/exponent definitions change along the ray.
void radial_crossings(const Point& x, const Point& w, double r, double a,
                      double b, std::vector<double>* out) {
  const double bb = dot(x, w);
  const double cc = dot(x, x) - r * r;
  const double disc = bb * bb - cc;
  if (disc <= 0.0) return;
  const double sq = std::sqrt(disc);
  for (double rho : {-bb - sq, -bb + sq})
    if (rho > a && rho < b) out->push_back(rho);
}

double far_segment(const KernelCtx& ctx, const Point& x, double ux,
                   const Dir& dir, double a, double b, double octave,
                   const GLRule& gl) {
  std::vector<double> cuts{a, b};
  for (double rb : ctx.u->radial_breaks)
    radial_crossings(x, dir.w, rb, a, b, &cuts);
  if (std::isfinite(ctx.u->support_radius))
    radial_crossings(x, dir.w, ctx.u->support_radius, a, b, &cuts);
  if (ctx.p->kind == ExponentKind::separable_radial && 1.0 > a && 1.0 < b)
    cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i])
      total += far_piece(ctx, x, ux, dir, cuts[i], cuts[i + 1], octave, gl);
  return total;
}

// Polar-at-origin integral over the shell r_lo < |y| < r_hi for
// singular-radial fields: resolves the u-singularity that a polar-at-x
// grid cannot see at small angular scales.
double origin_patch(const KernelCtx& ctx, const Point& x, double ux,
                    const std::vector<Dir>& dirs0, double r_lo, double r_hi,
                    double octave, const GLRule& gl) {
  double total = 0.0;
  const double s = ctx.s;
  const int n = ctx.n;
  for (const Dir& d0 : dirs0) {
    double lo = r_lo;
    double sum = 0.0;
    auto chunk = [&](double a, double b) {
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      for (std::size_t i = 0; i < gl.x.size(); ++i) {
        const double r = mid + half * gl.x[i];
        ctx.evals->fetch_add(1, std::memory_order_relaxed);
        const Point y = r * d0.w;
        const double diff = std::abs(ctx.u->value(y) - ux);
        if (diff <= 0.0) continue;
        const double dxy = distance(x, y);
        const double pt = eval_p(ctx, x, y);
        sum += half * gl.w[i] *
               std::exp(pt * std::log(diff) - (n + s * pt) * std::log(dxy) +
                        (n - 1) * std::log(r));
      }
    };
    for (int guard = 0; guard < 120 && r_hi / lo > octave; ++guard) {
      chunk(lo, lo * octave);
      lo *= octave;
    }
    chunk(lo, r_hi);
    total += d0.weight * sum;
  }
  return total;
}

struct InnerOut {
  double fine = 0.0;
  double coarse = 0.0;
};

InnerOut inner_at(const KernelCtx& ctx, const InnerRule& rule, const Point& x) {
  const ScalarField& u = *ctx.u;
  const double ux = u.value(x);
  const double rx = norm(x);

  // Near-field radius: half the distance to the boundary, capped at 1;
  // kept clear of the origin for singular fields.
  double delta = 0.5 * ctx.dom->distance_to_boundary(x);
  delta = std::min(delta, 1.0);
  if (ctx.singular) delta = std::min(delta, 0.5 * rx);

  // Origin shell handled in polar-at-origin coordinates.
  double patch_lo = std::max(ctx.cutoff, ctx.r_floor);
  if (ctx.dom->shape == Shape::annulus) patch_lo = std::max(patch_lo, ctx.dom->r_inner);
  double patch_hi = 0.0;
  if (ctx.singular) patch_hi = std::min(0.5 * rx, 0.5);
  const bool patch_active = ctx.singular && patch_hi > patch_lo * (1.0 + 1e-12);

  double excise = ctx.cutoff;
  if (patch_active) excise = patch_hi;

  const Point gx = delta > 0.0 ? u.gradient(x) : Point{};
  const double pbar = eval_p(ctx, x, x);
  const double alpha = std::max((1.0 - ctx.s) * pbar, 1e-14);

  InnerOut out;
  std::vector<double> dir_coarse(ctx.n == 2 ? rule.dirs.size() : 0);

  for (std::size_t j = 0; j < rule.dirs.size(); ++j) {
    const Dir& dir = rule.dirs[j];
    double fine = 0.0, coarse = 0.0;
    if (delta > 0.0) {
      fine += near_field(ctx, x, ux, gx, dir, delta, alpha, *rule.near_fine);
      coarse += near_field(ctx, x, ux, gx, dir, delta, alpha, *rule.near_coarse);
    }
    const auto segs = ray_segments(*ctx.dom, x, dir.w, excise);
    for (const auto& seg : segs) {
      const double a = std::max(seg.lo, delta);
      if (seg.hi > a) {
        fine += far_segment(ctx, x, ux, dir, a, seg.hi, rule.octave, *rule.far_fine);
        coarse +=
            far_segment(ctx, x, ux, dir, a, seg.hi, rule.octave, *rule.far_coarse);
      }
    }
    out.fine += dir.weight * fine;
    if (ctx.n == 2)
      dir_coarse[j] = coarse;
    else
      out.coarse += dir.weight * coarse;
  }
  if (ctx.n == 2) {
    // Angular sensitivity enters the estimate by halving the direction set.
    for (std::size_t j = 0; j < rule.dirs.size(); j += 2)
      out.coarse += 2.0 * rule.dirs[j].weight * dir_coarse[j];
  }

  if (patch_active) {
    const auto dirs0 = make_directions(ctx.n, rule.patch_angular);
    out.fine += origin_patch(ctx, x, ux, dirs0, patch_lo, patch_hi, rule.octave,
                             *rule.far_fine);
    out.coarse += origin_patch(ctx, x, ux, dirs0, patch_lo, patch_hi, rule.octave,
                               *rule.far_coarse);
  }
  return out;
}

void validate_fractional_inputs(const ScalarField& u, const Domain& dom, double s,
                                const ExponentField& p, const QuadratureSpec& spec) {
  if (!(s > 0.0) || s > spec.s_cap)
    throw std::invalid_argument("s outside (0, s_cap]; extrapolate instead");
  if (u.dimension != dom.dimension || p.dimension != dom.dimension)
    throw std::invalid_argument("field/exponent/domain dimensions disagree");
}

// Integrability audit for singular-radial fields without a cutoff: the
// kernel contribution of y near the origin against x at distance d >= 1
// scales like |y|^{n-1-a p(x,y)} with a = singular order; it diverges
// whenever a * p >= n on a set of x of positive measure.
bool diverges_uncut(const ScalarField& u, const Domain& dom, const ExponentField& p) {
  const double a = u.singular_order;
  if (a <= 0.0) return false;
  const double R = dom.outer_radius();
  double pmax = 0.0;
  const Point y0{1e-12, 0.0, 0.0};
  for (double t : {0.3, 0.6, 1.2, 1.5, 2.0, 3.0, 0.9 * R}) {
    if (t <= 0.0 || t >= R) continue;
    Point x{t, 0.0, 0.0};
    if (!dom.contains(x)) continue;
    pmax = std::max(pmax, p.evaluate(x, y0));
  }
  return a * pmax >= dom.dimension;
}

Domain effective_domain(const ScalarField& u, const Domain& dom, double cutoff) {
  if (!(cutoff > 0.0) || u.smoothness != Smoothness::singular_radial) return dom;
  const double inner = std::max(cutoff, dom.r_inner);
  return Domain::annulus(dom.dimension, inner, dom.r_outer);
}

}  // namespace

ModularResult fractional_modular(const ScalarField& u, const Domain& dom, double s,
                                 const ExponentField& p, const QuadratureSpec& spec,
                                 std::optional<double> inner_cutoff,
                                 bool swap_order) {
  validate_fractional_inputs(u, dom, s, p, spec);
  std::atomic<std::uint64_t> evals{0};

  KernelCtx ctx;
  ctx.u = &u;
  ctx.p = &p;
  ctx.s = s;
  ctx.n = dom.dimension;
  ctx.transpose = swap_order;
  ctx.evals = &evals;
  ctx.singular = u.smoothness == Smoothness::singular_radial;

  ModularResult out;
  Domain dom_eff = dom;
  if (ctx.singular) {
    if (dom.shape != Shape::ball && dom.shape != Shape::annulus)
      throw std::invalid_argument(
          "singular-radial fields require a ball or annulus domain");
    if (inner_cutoff) {
      if (!(*inner_cutoff > 0.0) || *inner_cutoff >= dom.r_outer)
        throw std::invalid_argument("inner cutoff must lie in (0, r_outer)");
      ctx.cutoff = *inner_cutoff;
      dom_eff = effective_domain(u, dom, ctx.cutoff);
      out.truncation_note =
          "inner cutoff eps=" + std::to_string(ctx.cutoff) +
          " applied: domain excised to the annulus (eps, R) in both variables";
    } else {
      if (diverges_uncut(u, dom, p)) {
        out.value = kInf;
        out.error_estimate = 0.0;
        out.truncation_note =
            "divergent: singular order times far-field exponent >= n; "
            "supply inner_cutoff to estimate the divergence rate";
        return out;
      }
      ctx.r_floor = 1e-9;
      out.truncation_note = "integrable singularity; radial floor 1e-9 applied";
    }
  }
  ctx.dom = &dom_eff;

  const InnerRule rule = make_inner_rule(ctx.n, spec);
  NodeFn node = [&](const Point& x) {
    const InnerOut io = inner_at(ctx, rule, x);
    return NodeOut{io.fine, std::abs(io.fine - io.coarse)};
  };
  auto res = adaptive_engine(
      initial_cells(dom_eff, spec, ctx.singular), node, spec, spec.grading_exponent,
      [&] { return evals.load(std::memory_order_relaxed) >= spec.max_evals; });

  const double pref = s * (1.0 - s);
  out.value = pref * res.value;
  out.error_estimate =
      pref * (res.outer_err + res.node_err) + 1e-16 * std::abs(out.value);
  out.evals = evals.load();
  if (res.budget_hit) {
    if (!out.truncation_note.empty()) out.truncation_note += "; ";
    out.truncation_note += "max_evals exceeded; estimate inconclusive";
  }
  return out;
}

FractionalPlan plan_fractional(const ScalarField& u, const Domain& dom, double s,
                               const ExponentField& p, const QuadratureSpec& spec,
                               std::optional<double> inner_cutoff) {
  validate_fractional_inputs(u, dom, s, p, spec);
  FractionalPlan plan;
  plan.dom = dom;
  plan.s = s;
  plan.p = p;
  plan.spec = spec;
  plan.cutoff = inner_cutoff.value_or(0.0);

  if (u.smoothness == Smoothness::singular_radial && !inner_cutoff &&
      diverges_uncut(u, dom, p)) {
    plan.divergent = true;
    plan.note = "divergent modular: not in W^{s,p(.,.)}";
    return plan;
  }

  std::atomic<std::uint64_t> evals{0};
  KernelCtx ctx;
  ctx.u = &u;
  ctx.p = &plan.p;
  ctx.s = s;
  ctx.n = dom.dimension;
  ctx.evals = &evals;
  ctx.singular = u.smoothness == Smoothness::singular_radial;
  ctx.cutoff = plan.cutoff;
  if (ctx.singular && !(plan.cutoff > 0.0)) ctx.r_floor = 1e-9;
  Domain dom_eff = effective_domain(u, dom, plan.cutoff);
  ctx.dom = &dom_eff;

  const InnerRule rule = make_inner_rule(ctx.n, spec);
  NodeFn node = [&](const Point& x) {
    const InnerOut io = inner_at(ctx, rule, x);
    return NodeOut{io.fine, std::abs(io.fine - io.coarse)};
  };
  auto res = adaptive_engine(
      initial_cells(dom_eff, spec, ctx.singular), node, spec, spec.grading_exponent,
      [&] { return evals.load(std::memory_order_relaxed) >= spec.max_evals; });
  plan.cells = std::move(res.leaves);
  plan.outer_error = res.outer_err;
  return plan;
}

ModularResult fractional_with_plan(const FractionalPlan& plan,
                                   const ScalarField& u) {
  ModularResult out;
  if (plan.divergent) {
    out.value = kInf;
    out.truncation_note = plan.note;
    return out;
  }
  std::atomic<std::uint64_t> evals{0};
  KernelCtx ctx;
  ctx.u = &u;
  ctx.p = &plan.p;
  ctx.s = plan.s;
  ctx.n = plan.dom.dimension;
  ctx.evals = &evals;
  ctx.singular = u.smoothness == Smoothness::singular_radial;
  ctx.cutoff = plan.cutoff;
  if (ctx.singular && !(plan.cutoff > 0.0)) ctx.r_floor = 1e-9;
  Domain dom_eff = effective_domain(u, plan.dom, plan.cutoff);
  ctx.dom = &dom_eff;

  const InnerRule rule = make_inner_rule(ctx.n, plan.spec);
  NodeFn node = [&](const Point& x) {
    const InnerOut io = inner_at(ctx, rule, x);
    return NodeOut{io.fine, std::abs(io.fine - io.coarse)};
  };
  std::vector<double> vals(plan.cells.size());
  std::vector<double> nerrs(plan.cells.size());
  parallel_for(plan.cells.size(), [&](std::size_t i) {
    const CellValue v = eval_cell(plan.cells[i], node);
    vals[i] = v.integral;
    nerrs[i] = v.node_err;
  });
  const double pref = plan.s * (1.0 - plan.s);
  out.value = pref * pairwise_sum(vals);
  double nerr = 0.0;
  for (double e : nerrs) nerr += e;
  out.error_estimate = pref * (plan.outer_error + nerr) + 1e-16 * std::abs(out.value);
  out.evals = evals.load();
  return out;
}

ModularResult pointwise_fs(const ScalarField& u, const Point& x, const Domain& dom,
                           double s, const ExponentField& p,
                           const QuadratureSpec& spec) {
  validate_fractional_inputs(u, dom, s, p, spec);
  if (!dom.contains(x) && norm(x) < u.support_radius)
    throw std::invalid_argument(
        "pointwise_fs requires x in the domain or outside supp u");

  std::atomic<std::uint64_t> evals{0};
  KernelCtx ctx;
  ctx.u = &u;
  ctx.p = &p;
  ctx.s = s;
  ctx.n = dom.dimension;
  ctx.evals = &evals;
  ctx.singular = u.smoothness == Smoothness::singular_radial;
  if (ctx.singular) ctx.r_floor = 1e-9;
  ctx.dom = &dom;

  const InnerRule rule = make_inner_rule(ctx.n, spec);
  const InnerOut io = inner_at(ctx, rule, x);
  const double pref = s * (1.0 - s);
  ModularResult out;
  out.value = pref * io.fine;
  out.error_estimate =
      pref * std::abs(io.fine - io.coarse) + 1e-16 * std::abs(out.value);
  out.evals = evals.load();
  return out;
}

}  // namespace varexp
