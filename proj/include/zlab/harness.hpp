#pragma once

// Experiment configuration, canned instances, rate fitting, CSV emission,
// and the acceptance suite behind the zlab command-line driver.

#include "zlab/adiabatic.hpp"
#include "zlab/ergodic.hpp"
#include "zlab/linops.hpp"
#include "zlab/propagate.hpp"
#include "zlab/zeno.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace zlab {

enum class ExperimentKind { zeno, adiabatic, ergodic, bounds, selftest };

// name <-> enum; unknown names throw config_error
ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

// A fully specified experiment: the dispatch kind, a name echoed into the
// CSV meta line, the seed, and the kind-specific instance document. The
// schema is documented in the README; matrices are nested row-major arrays
// of [re, im] pairs.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::selftest;
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  nlohmann::json instance;
};

// Schema-checked construction; error messages name the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

// Canned desk-scale scenarios: zeno_projective, zeno_contraction,
// unitary_kick, cptp_kick, adiabatic_unitary, adiabatic_block.
ExperimentConfig preset(const std::string& name);

nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& node, const std::string& field);

struct ExperimentResult {
  ExperimentConfig config;
  ErrorCurve curve;
  std::string control_label = "n";  // header name of the control column
  std::vector<std::pair<std::string, double>> extras;  // constant columns
  bool bound_ok = true;  // bound >= measured held on every bound-bearing row
};

// Dispatches on config.kind and evaluates the error curve, fanning grid
// points out to a worker pool (capped by ZLAB_THREADS); results are gathered
// in grid order, so the output is deterministic regardless of scheduling.
// Post-run checks: control strictly increasing, measured >= 0, and
// bound >= measured wherever a bound is present (recorded in bound_ok).
ExperimentResult run_experiment(const ExperimentConfig& config);

// CSV layout: a meta line echoing name/kind/seed, a generated-at timestamp
// line, a mandatory header, one row per curve point (17 significant digits),
// and a bound_check footer when any row carries a bound. csv_body() is
// everything except the timestamp line — the deterministic portion.
std::string csv_body(const ExperimentResult& result);
void write_csv(const ExperimentResult& result, std::ostream& os);
void write_csv_file(const ExperimentResult& result, const std::string& path);

struct RateFit {
  double C = 0.0;
  double p = 0.0;
  double r2 = 0.0;
};

// Least-squares fit of log(measured) = log C - p * log(control) over the
// rows with control in [control_min, control_max]; needs at least three rows
// with measured > 1e-13 in that window.
RateFit fit_rate(const ErrorCurve& curve, double control_min,
                 double control_max);

// Runs the full acceptance suite, one PASS/FAIL line per criterion, and
// returns the number of failures.
int run_selftest(std::ostream& os);

}  // namespace zlab
