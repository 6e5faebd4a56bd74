#pragma once

// Experiment runner. A spec is JSON:
//   {"name": str, "task": str,
//    "instance": {...} | "instances": [{...}, ...],  generator or {"file": path}
//    "sweep": [{...overrides...}, ...],              optional
//    "variants": [{"label": str, "params": {...}}],  optional
//    "seeds": [int, ...] | {"start": int, "count": int},
//    "params": {...estimator params...},
//    "assert": {...}}
// or {"name": str, "experiments": [spec, ...]}.
//
// Runs are variant × instance × sweep point × seed. Every run is a function
// of (spec, seed): the instance is generated from the seed and the estimator
// seeded from it. Rows land in <out>/<name>/<name>.csv and one JSON report
// per run under <out>/<name>/runs/.
//
// Assertions:
//   "rate_min": {check: fraction}   share of rows whose per-run check holds
//   "abs_error_max": x              |estimate − exact_or_bound| on every row
//   "errors_max": n                 failed runs allowed (default 0)
//   "slope": [{x, y, max?, below?, below_label?, label?, log_power?}]
//   "log_slope_max": [{x, y, max}]  slope of ln y on ln x (no deflation)
//   "runtime_max_s": t              wall time of the whole experiment
// x and y name CSV columns or per-run "metrics" entries.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sublin::bench {

inline const std::vector<std::string> kTasks = {"thsc",         "thsc_no_pairs",  "rgmm",
                                                "steiner",      "oracle_equiv",   "sparsify_props",
                                                "mc_expectation"};

struct ExperimentSpec {
  std::string name;
  std::string task;
  std::vector<nlohmann::json> instances;
  std::vector<nlohmann::json> sweep;
  std::vector<nlohmann::json> variants;
  std::vector<std::uint64_t> seeds;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json asserts = nlohmann::json::object();

  /// Throws ConfigError on a malformed spec.
  static ExperimentSpec from_json(const nlohmann::json& j);
};

struct RunRow {
  std::string label;
  std::size_t index = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double exact_or_bound = 0.0;
  std::uint64_t queries_membership = 0;
  std::uint64_t queries_distance = 0;
  double wall_ms = 0.0;
  std::string status = "ok";
  std::string detail;
  nlohmann::json report;  // includes "checks" and "metrics"
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  std::string task;
  std::vector<RunRow> rows;
  std::vector<Assertion> assertions;
  nlohmann::json summary;
  double wall_s = 0.0;

  bool passed() const;
};

struct RunOptions {
  std::size_t jobs = 1;
  std::string out_dir;                        // empty: write nothing
  std::optional<std::uint64_t> seed_override; // replaces the seed list
  std::string base_dir;                       // resolves relative instance files
};

/// One run of `task` on an instance description with merged params.
RunRow run_single(const std::string& task, const nlohmann::json& instance,
                  const nlohmann::json& params, std::uint64_t seed);

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts);

/// Handles both single specs and {"experiments": [...]} bundles.
std::vector<ExperimentResult> run_spec(const nlohmann::json& spec, const RunOptions& opts);
std::vector<ExperimentResult> run_spec_file(const std::string& path, RunOptions opts);

std::string csv_header();
std::string csv_row(const RunRow& row);
void write_csv(const std::string& path, const std::vector<RunRow>& rows);

/// Value of a CSV column or a per-run metric; nullopt when absent.
std::optional<double> row_value(const RunRow& row, const std::string& name);

}  // namespace sublin::bench
