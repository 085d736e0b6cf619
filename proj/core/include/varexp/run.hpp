#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "varexp/quadrature.hpp"

namespace varexp {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// One CLI invocation. Commands: knp-table, modular, norm, bbm-sweep,
/// pointwise, majorant, counterexample, log-holder.
struct RunConfig {
  std::string command;
  std::string field_name;
  std::string exponent_name;
  std::string domain_spec;
  std::vector<double> s_list;
  std::vector<double> eps_list;
  std::vector<int> n_list;                  // knp-table
  std::vector<double> p_list;               // knp-table
  std::vector<std::vector<double>> points;  // pointwise / majorant
  double s = 0.5;                           // modular / counterexample
  double s0 = 0.5;                          // majorant fit point
  double log_holder_L = 10.0;
  double q = 1.5;  // counterexample parameters
  double pbar = 7.0 / 6.0;
  double pinf = 4.0;
  std::string modular_kind = "fractional";  // modular/norm: lebesgue|sobolev|fractional
  double cutoff = 0.0;                      // 0 = none
  double norm_tol = 1e-6;
  QuadratureSpec quad;
  std::string output = "report";  // base path; .json and .csv are appended
  std::string format = "json";    // which report is echoed to stdout
  unsigned threads = 0;           // 0 = VAREXP_THREADS or auto
};

/// Execute without touching the filesystem.
struct RunResult {
  int exit_code = 0;
  nlohmann::json report;  // full provenance: echoed config + results
  std::string csv;        // plot-ready, RFC 4180
};
RunResult run(const RunConfig& cfg);

/// Execute and write <output>.json / <output>.csv; echoes the selected
/// format to stdout. Returns the process exit code (0 ok, 1 input error,
/// 2 assertion failure).
int run_and_write(const RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

/// Every floating-point value in the CSV uses 17 significant digits.
std::string format_double(double v);

}  // namespace varexp
