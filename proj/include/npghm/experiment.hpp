#pragma once

#include "npghm/algorithms.hpp"
#include "npghm/config.hpp"
#include "npghm/specs.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace npghm {

/// One CSV line. Columns, in order:
///   algorithm,seed,t,trajectories,wall_ms,j_hat,gap,u_norm,w_norm,alpha,beta
/// Optional fields are written as empty cells. Numbers use the shortest
/// representation that round-trips.
struct MetricsRow {
  std::string algorithm;
  std::uint64_t seed = 0;
  int t = 0;
  long trajectories = 0;
  std::optional<double> wall_ms;
  std::optional<double> j_hat;
  std::optional<double> gap;
  std::optional<double> u_norm;
  std::optional<double> w_norm;
  std::optional<double> alpha;
  std::optional<double> beta;
};

const std::string& csv_header();
std::vector<MetricsRow> metrics_rows(Algorithm alg, std::uint64_t seed, const RunResult& run,
                                     const std::vector<double>* wall_ms = nullptr);
std::string format_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_csv(const std::string& text);

struct CellResult {
  Algorithm algorithm = Algorithm::kNpgHm;
  std::uint64_t seed = 0;
  double alpha0 = 0.0;
  int T = 0;
  RunResult run;
  std::vector<double> wall_ms;  // per record, when timing is recorded
  std::string abort_message;    // nonempty when the run hit a non-finite value
  std::string abort_diagnostic;  // JSON with theta and the momentum state
  std::string abort_path;        // where the diagnostic was written
};

struct ExperimentOutcome {
  std::vector<CellResult> cells;  // algorithm-major, then seed, in spec order
  nlohmann::json summary;
  bool aborted = false;
};

/// Resolves alpha0 and T for one algorithm.
double alpha0_for(const ExperimentSpec& spec, Algorithm alg, const AnyEnv& env, const AnyPolicy& policy);
int iterations_for(const ExperimentSpec& spec, Algorithm alg);

/// Runs every (algorithm, seed) cell on `spec.threads` workers. Results do
/// not depend on the thread count. With `write_files`, the output directory
/// receives `<alg>_seed<seed>.csv`, `<alg>_seed<seed>.policy` and
/// `summary.json`.
ExperimentOutcome run_experiment(const ExperimentSpec& spec, const AnyEnv& env,
                                 const AnyPolicy& policy, bool write_files = true);

struct SweepRow {
  double alpha0 = 0.0;
  int tau0 = 0;
  int k = 0;
  Algorithm algorithm = Algorithm::kNpgHm;
  int T = 0;
  long trajectories = 0;
  double median_final_gap = 0.0;   // NaN when no exact gap is available
  double median_final_j_hat = 0.0;
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // index of the best row by median gap (or J_hat)
  nlohmann::json json;
};

/// Cartesian product over sweep.alpha0 x sweep.tau0 x sweep.K; axes left
/// empty use the base value. Writes sweep.csv and sweep.json.
SweepOutcome run_sweep(const ExperimentSpec& spec, const AnyEnv& env, const AnyPolicy& policy,
                       bool write_files = true);

double median(std::vector<double> values);
/// Interquartile range with linear interpolation between order statistics.
double iqr(std::vector<double> values);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace npghm
