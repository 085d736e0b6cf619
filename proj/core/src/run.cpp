#include "varexp/run.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "varexp/catalog.hpp"
#include "varexp/experiments.hpp"
#include "varexp/reduce.hpp"
#include "varexp/spaces.hpp"

namespace varexp {

namespace {

using nlohmann::json;

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") != std::string::npos) {
      line += '"';
      for (char c : f) {
        if (c == '"') line += '"';
        line += c;
      }
      line += '"';
    } else {
      line += f;
    }
  }
  return line + "\r\n";
}

std::string fmt(double v) { return format_double(v); }

json to_json(const ModularResult& m) {
  json j;
  j["value"] = m.value;
  j["error_estimate"] = m.error_estimate;
  j["evals"] = m.evals;
  if (!m.truncation_note.empty()) j["truncation_note"] = m.truncation_note;
  return j;
}

json to_json(const NormResult& r) {
  json j;
  j["norm"] = r.norm;
  j["modular_at_norm"] = r.modular_at_norm;
  j["bisection_iters"] = r.bisection_iters;
  j["status"] = r.status == NormStatus::ok
                    ? "ok"
                    : (r.status == NormStatus::zero ? "zero" : "not-in-space");
  return j;
}

json to_json(const LogHolderReport& r) {
  json j;
  j["max_ratio"] = r.max_ratio;
  j["worst_point"] = {r.worst_point[0], r.worst_point[1], r.worst_point[2]};
  j["worst_radius"] = r.worst_radius;
  j["sample_count"] = r.sample_count;
  j["skipped"] = r.skipped;
  j["verdict"] = r.verdict == LogHolderVerdict::bounded_by_L
                     ? "bounded-by-L"
                     : (r.verdict == LogHolderVerdict::violated ? "violated"
                                                                : "inconclusive");
  return j;
}

Point to_point(const std::vector<double>& v) {
  if (v.empty() || v.size() > 3)
    throw std::invalid_argument("points must have 1 to 3 coordinates");
  Point p{};
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return p;
}

struct Handler {
  json results;
  std::string csv;
  bool assertion_failed = false;
};

Handler handle_knp_table(const RunConfig& cfg) {
  if (cfg.n_list.empty() || cfg.p_list.empty())
    throw std::invalid_argument("knp-table requires --n and --p lists");
  Handler h;
  h.csv = csv_line({"n", "p", "k_gamma", "k_sphere", "rel_diff"});
  h.results["table"] = json::array();
  for (int n : cfg.n_list)
    for (double p : cfg.p_list) {
      const KConstant k = k_constant(n, p);
      const double rel = std::abs(k.value_gamma - k.value_sphere) / k.value_gamma;
      json row;
      row["n"] = n;
      row["p"] = p;
      row["k_gamma"] = k.value_gamma;
      row["k_sphere"] = k.value_sphere;
      row["rel_diff"] = rel;
      h.results["table"].push_back(row);
      h.csv += csv_line({std::to_string(n), fmt(p), fmt(k.value_gamma),
                         fmt(k.value_sphere), fmt(rel)});
    }
  return h;
}

struct Instruments {
  Domain dom;
  ScalarField u;
  ExponentField p;
};

Instruments make_instruments(const RunConfig& cfg) {
  if (cfg.domain_spec.empty()) throw std::invalid_argument("missing --domain");
  if (cfg.field_name.empty()) throw std::invalid_argument("missing --field");
  if (cfg.exponent_name.empty()) throw std::invalid_argument("missing --exponent");
  Domain dom = make_domain(cfg.domain_spec);
  ScalarField u = make_field(cfg.field_name, dom.dimension);
  ExponentField p = make_exponent(cfg.exponent_name, dom.dimension);
  return {std::move(dom), std::move(u), std::move(p)};
}

Handler handle_modular(const RunConfig& cfg) {
  auto [dom, u, p] = make_instruments(cfg);
  Handler h;
  h.csv = csv_line({"kind", "s", "value", "error_estimate", "evals"});
  const DiagonalExponent qbar = [&p](const Point& x) { return p.trace(x); };
  if (cfg.modular_kind == "fractional") {
    std::optional<double> cutoff;
    if (cfg.cutoff > 0.0) cutoff = cfg.cutoff;
    const ModularResult m = fractional_modular(u, dom, cfg.s, p, cfg.quad, cutoff);
    h.results["fractional"] = to_json(m);
    h.csv += csv_line({"fractional", fmt(cfg.s), fmt(m.value),
                       fmt(m.error_estimate), std::to_string(m.evals)});
  } else if (cfg.modular_kind == "lebesgue") {
    const ModularResult m = lebesgue_modular(u, dom, qbar, cfg.quad);
    h.results["lebesgue"] = to_json(m);
    h.csv += csv_line({"lebesgue", "", fmt(m.value), fmt(m.error_estimate),
                       std::to_string(m.evals)});
  } else if (cfg.modular_kind == "sobolev") {
    const SobolevModular m = sobolev_modular(u, dom, qbar, cfg.quad);
    h.results["sobolev_unweighted"] = to_json(m.unweighted);
    h.results["sobolev_weighted"] = to_json(m.weighted);
    h.csv += csv_line({"sobolev_unweighted", "", fmt(m.unweighted.value),
                       fmt(m.unweighted.error_estimate),
                       std::to_string(m.unweighted.evals)});
    h.csv += csv_line({"sobolev_weighted", "", fmt(m.weighted.value),
                       fmt(m.weighted.error_estimate),
                       std::to_string(m.weighted.evals)});
  } else {
    throw std::invalid_argument("modular kind must be fractional, lebesgue or sobolev");
  }
  return h;
}

Handler handle_norm(const RunConfig& cfg) {
  auto [dom, u, p] = make_instruments(cfg);
  Handler h;
  NormResult r;
  if (cfg.modular_kind == "fractional") {
    std::optional<double> cutoff;
    if (cfg.cutoff > 0.0) cutoff = cfg.cutoff;
    r = fractional_seminorm(u, dom, cfg.s, p, cfg.quad, cfg.norm_tol, cutoff);
  } else if (cfg.modular_kind == "lebesgue") {
    const DiagonalExponent qbar = [&p](const Point& x) { return p.trace(x); };
    r = lebesgue_norm(u, dom, qbar, cfg.quad, cfg.norm_tol);
  } else {
    throw std::invalid_argument("norm kind must be fractional or lebesgue");
  }
  h.results["norm"] = to_json(r);
  h.csv = csv_line({"norm", "modular_at_norm", "bisection_iters", "status"});
  h.csv += csv_line({fmt(r.norm), fmt(r.modular_at_norm),
                     std::to_string(r.bisection_iters),
                     std::string(h.results["norm"]["status"])});
  return h;
}

Handler handle_bbm_sweep(const RunConfig& cfg) {
  if (cfg.s_list.empty()) throw std::invalid_argument("bbm-sweep requires --s values");
  auto [dom, u, p] = make_instruments(cfg);
  const SweepReport rep =
      bbm_sweep(u, dom, p, cfg.s_list, cfg.quad, cfg.log_holder_L);
  Handler h;
  h.results["local_limit"] = to_json(rep.local_limit);
  h.results["converging"] = rep.converging;
  h.results["extrapolated_limit"] = rep.extrapolated_limit;
  h.results["log_holder"] = to_json(rep.log_holder);
  if (!rep.warning.empty()) h.results["warning"] = rep.warning;
  h.results["sweep"] = json::array();
  h.csv = csv_line({"s", "modular", "error_estimate", "local_limit", "rel_error"});
  for (std::size_t i = 0; i < rep.s_values.size(); ++i) {
    json row;
    row["s"] = rep.s_values[i];
    row["modular"] = to_json(rep.modulars[i]);
    row["rel_error"] = rep.rel_errors[i];
    h.results["sweep"].push_back(row);
    h.csv += csv_line({fmt(rep.s_values[i]), fmt(rep.modulars[i].value),
                       fmt(rep.modulars[i].error_estimate),
                       fmt(rep.local_limit.value), fmt(rep.rel_errors[i])});
  }
  return h;
}

Handler handle_pointwise(const RunConfig& cfg) {
  if (cfg.s_list.empty() || cfg.points.empty())
    throw std::invalid_argument("pointwise requires --s values and --point entries");
  auto [dom, u, p] = make_instruments(cfg);
  std::vector<Point> pts;
  for (const auto& v : cfg.points) pts.push_back(to_point(v));
  const PointwiseTable table =
      pointwise_limit_study(u, pts, dom, p, cfg.s_list, cfg.quad);
  Handler h;
  h.results["rows"] = json::array();
  h.csv = csv_line({"x0", "x1", "x2", "s", "fs", "target", "abs_error"});
  for (const auto& row : table.rows) {
    json jr;
    jr["x"] = {row.x[0], row.x[1], row.x[2]};
    jr["target"] = row.target;
    jr["fs"] = row.fs;
    jr["fs_errors"] = row.fs_errors;
    jr["abs_errors"] = row.abs_errors;
    jr["monotone"] = row.monotone;
    h.results["rows"].push_back(jr);
    for (std::size_t i = 0; i < table.s_values.size(); ++i)
      h.csv += csv_line({fmt(row.x[0]), fmt(row.x[1]), fmt(row.x[2]),
                         fmt(table.s_values[i]), fmt(row.fs[i]), fmt(row.target),
                         fmt(row.abs_errors[i])});
  }
  return h;
}

Handler handle_majorant(const RunConfig& cfg) {
  if (cfg.s_list.empty() || cfg.points.empty())
    throw std::invalid_argument("majorant requires --s values and --point entries");
  auto [dom, u, p] = make_instruments(cfg);
  std::vector<Point> pts;
  for (const auto& v : cfg.points) pts.push_back(to_point(v));
  const MajorantReport rep =
      majorant_check(u, dom, p, cfg.s0, cfg.s_list, pts, cfg.quad);
  Handler h;
  h.results["s0"] = rep.s0;
  h.results["fitted_C"] = rep.fitted_C;
  h.results["truncation_radius"] = rep.truncation_radius;
  h.results["all_bounded"] = rep.all_bounded;
  h.results["decay_exponent"] = rep.decay_exponent;
  h.results["far_points"] = rep.far_points;
  h.results["rows"] = json::array();
  h.csv = csv_line({"x0", "x1", "x2", "s", "fs", "bound", "bounded"});
  for (const auto& row : rep.rows) {
    json jr;
    jr["x"] = {row.x[0], row.x[1], row.x[2]};
    jr["shape"] = row.shape;
    jr["fs"] = row.fs;
    jr["bounded"] = row.bounded;
    h.results["rows"].push_back(jr);
    for (std::size_t i = 0; i < rep.s_values.size(); ++i)
      h.csv += csv_line({fmt(row.x[0]), fmt(row.x[1]), fmt(row.x[2]),
                         fmt(rep.s_values[i]), fmt(row.fs[i]),
                         fmt(rep.fitted_C * row.shape),
                         row.bounded ? "true" : "false"});
  }
  h.assertion_failed = !rep.all_bounded;
  return h;
}

Handler handle_counterexample(const RunConfig& cfg) {
  if (cfg.eps_list.empty())
    throw std::invalid_argument("counterexample requires --eps values");
  const int n = cfg.domain_spec.empty() ? 2 : make_domain(cfg.domain_spec).dimension;
  const DivergenceReport rep = counterexample_run(n, cfg.q, cfg.pbar, cfg.pinf,
                                                  cfg.eps_list, cfg.s, cfg.quad);
  Handler h;
  h.results["n"] = rep.n;
  h.results["q"] = rep.q;
  h.results["pbar"] = rep.pbar;
  h.results["pinf"] = rep.pinf;
  h.results["s"] = rep.s;
  h.results["slope_vs_log"] = rep.slope_vs_log;
  h.results["decade_slopes"] = rep.decade_slopes;
  h.results["sobolev_modular"] = to_json(rep.sobolev_modular);
  h.results["luxemburg_not_in_space"] = rep.luxemburg_not_in_space;
  h.results["verdict"] = rep.verdict == DivergenceVerdict::diverges_log
                             ? "diverges-log"
                             : "inconclusive";
  h.results["modulars"] = json::array();
  h.csv = csv_line(
      {"eps", "modular", "error_estimate", "sobolev_modular", "slope_vs_log"});
  for (std::size_t i = 0; i < rep.cutoffs.size(); ++i) {
    json row;
    row["eps"] = rep.cutoffs[i];
    row["modular"] = to_json(rep.modulars[i]);
    h.results["modulars"].push_back(row);
    h.csv += csv_line({fmt(rep.cutoffs[i]), fmt(rep.modulars[i].value),
                       fmt(rep.modulars[i].error_estimate),
                       fmt(rep.sobolev_modular.value), fmt(rep.slope_vs_log)});
  }
  h.assertion_failed = rep.verdict != DivergenceVerdict::diverges_log ||
                       !rep.luxemburg_not_in_space;
  return h;
}

Handler handle_log_holder(const RunConfig& cfg) {
  if (cfg.domain_spec.empty()) throw std::invalid_argument("missing --domain");
  if (cfg.exponent_name.empty()) throw std::invalid_argument("missing --exponent");
  const Domain dom = make_domain(cfg.domain_spec);
  const ExponentField p = make_exponent(cfg.exponent_name, dom.dimension);
  const LogHolderReport rep =
      check_log_holder(p, dom, cfg.log_holder_L, default_sampling_grid(dom));
  Handler h;
  h.results["report"] = to_json(rep);
  h.csv = csv_line({"max_ratio", "worst_x0", "worst_x1", "worst_x2",
                    "worst_radius", "sample_count", "skipped", "verdict"});
  h.csv += csv_line({fmt(rep.max_ratio), fmt(rep.worst_point[0]),
                     fmt(rep.worst_point[1]), fmt(rep.worst_point[2]),
                     fmt(rep.worst_radius), std::to_string(rep.sample_count),
                     std::to_string(rep.skipped),
                     std::string(h.results["report"]["verdict"])});
  h.assertion_failed = rep.verdict == LogHolderVerdict::violated;
  return h;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["field"] = cfg.field_name;
  j["exponent"] = cfg.exponent_name;
  j["domain"] = cfg.domain_spec;
  j["s_list"] = cfg.s_list;
  j["eps_list"] = cfg.eps_list;
  j["n_list"] = cfg.n_list;
  j["p_list"] = cfg.p_list;
  j["points"] = cfg.points;
  j["s"] = cfg.s;
  j["s0"] = cfg.s0;
  j["log_holder_L"] = cfg.log_holder_L;
  j["q"] = cfg.q;
  j["pbar"] = cfg.pbar;
  j["pinf"] = cfg.pinf;
  j["modular_kind"] = cfg.modular_kind;
  j["cutoff"] = cfg.cutoff;
  j["norm_tol"] = cfg.norm_tol;
  j["quad"] = {{"rel_tol", cfg.quad.rel_tol},
               {"abs_tol", cfg.quad.abs_tol},
               {"max_evals", cfg.quad.max_evals},
               {"base_level", cfg.quad.base_level},
               {"grading_exponent", cfg.quad.grading_exponent},
               {"s_cap", cfg.quad.s_cap}};
  j["output"] = cfg.output;
  j["format"] = cfg.format;
  j["threads"] = cfg.threads;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  cfg.command = j.value("command", "");
  cfg.field_name = j.value("field", "");
  cfg.exponent_name = j.value("exponent", "");
  cfg.domain_spec = j.value("domain", "");
  cfg.s_list = j.value("s_list", std::vector<double>{});
  cfg.eps_list = j.value("eps_list", std::vector<double>{});
  cfg.n_list = j.value("n_list", std::vector<int>{});
  cfg.p_list = j.value("p_list", std::vector<double>{});
  cfg.points = j.value("points", std::vector<std::vector<double>>{});
  cfg.s = j.value("s", 0.5);
  cfg.s0 = j.value("s0", 0.5);
  cfg.log_holder_L = j.value("log_holder_L", 10.0);
  cfg.q = j.value("q", 1.5);
  cfg.pbar = j.value("pbar", 7.0 / 6.0);
  cfg.pinf = j.value("pinf", 4.0);
  cfg.modular_kind = j.value("modular_kind", "fractional");
  cfg.cutoff = j.value("cutoff", 0.0);
  cfg.norm_tol = j.value("norm_tol", 1e-6);
  if (j.contains("quad")) {
    const json& q = j["quad"];
    cfg.quad.rel_tol = q.value("rel_tol", cfg.quad.rel_tol);
    cfg.quad.abs_tol = q.value("abs_tol", cfg.quad.abs_tol);
    cfg.quad.max_evals = q.value("max_evals", cfg.quad.max_evals);
    cfg.quad.base_level = q.value("base_level", cfg.quad.base_level);
    cfg.quad.grading_exponent = q.value("grading_exponent", cfg.quad.grading_exponent);
    cfg.quad.s_cap = q.value("s_cap", cfg.quad.s_cap);
  }
  cfg.output = j.value("output", "report");
  cfg.format = j.value("format", "json");
  cfg.threads = j.value("threads", 0u);
  return cfg;
}

RunResult run(const RunConfig& cfg) {
  RunResult out;
  out.report["schema_version"] = kSchemaVersion;
  out.report["versions"] = {{"varexp", kVersion}};
  out.report["command"] = cfg.command;
  out.report["config"] = config_to_json(cfg);

  if (cfg.threads > 0) set_max_threads(cfg.threads);

  try {
    Handler h;
    if (cfg.command == "knp-table")
      h = handle_knp_table(cfg);
    else if (cfg.command == "modular")
      h = handle_modular(cfg);
    else if (cfg.command == "norm")
      h = handle_norm(cfg);
    else if (cfg.command == "bbm-sweep")
      h = handle_bbm_sweep(cfg);
    else if (cfg.command == "pointwise")
      h = handle_pointwise(cfg);
    else if (cfg.command == "majorant")
      h = handle_majorant(cfg);
    else if (cfg.command == "counterexample")
      h = handle_counterexample(cfg);
    else if (cfg.command == "log-holder")
      h = handle_log_holder(cfg);
    else
      throw std::invalid_argument(
          "unknown command '" + cfg.command +
          "'; commands: knp-table, modular, norm, bbm-sweep, pointwise, "
          "majorant, counterexample, log-holder");

    out.report["results"] = std::move(h.results);
    out.csv = std::move(h.csv);
    out.exit_code = h.assertion_failed ? 2 : 0;
    if (h.assertion_failed) out.report["assertion_failed"] = true;
  } catch (const std::invalid_argument& e) {
    out.report["error"] = e.what();
    out.exit_code = 1;
  } catch (const std::exception& e) {
    out.report["error"] = e.what();
    out.exit_code = 2;
  }
  return out;
}

int run_and_write(const RunConfig& cfg) {
  const RunResult res = run(cfg);
  {
    std::ofstream js(cfg.output + ".json");
    js << res.report.dump(2) << "\n";
  }
  {
    std::ofstream cs(cfg.output + ".csv", std::ios::binary);
    cs << res.csv;
  }
  if (cfg.format == "csv")
    std::cout << res.csv;
  else
    std::cout << res.report.dump(2) << "\n";
  return res.exit_code;
}

}  // namespace varexp
