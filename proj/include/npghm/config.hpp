#pragma once

#include "npghm/algorithms.hpp"
#include "npghm/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace npghm {

/// Flat `key = value` configuration. Keys may contain dots (`run.T`,
/// `subproblem.K`); `[section]` lines prefix the keys that follow with
/// `section.`. '#' starts a comment. Duplicate keys are an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys that no reader asked for; reported as typos.
  std::vector<std::string> unused_keys() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  void touch(const std::string& key) const { used_[key] = true; }

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

double parse_double(const std::string& text, const std::string& what);
int parse_int(const std::string& text, const std::string& what);
std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text, const std::string& what);

enum class PolicyKind { kAuto, kSoftmax, kGaussian };

struct PolicySpec {
  PolicyKind kind = PolicyKind::kAuto;
  double sigma = 0.5;
  double truncation = 3.0;
  std::string features = "affine";
  std::string init_path;  // empty: theta = 0
};

struct ExperimentSpec {
  std::string env = "chain5";
  PolicySpec policy;
  RunConfig run;
  /// Subproblem solver name, or "auto" (exact on tabular, sgd otherwise).
  std::string solver = "auto";
  bool alpha0_theoretical = false;
  bool alpha0_explicit = false;  // otherwise default_alpha0(algorithm)
  std::map<Algorithm, double> alpha0_override;
  std::vector<Algorithm> algorithms = {Algorithm::kNpgHm};
  std::vector<std::uint64_t> seeds = {1};
  /// Trajectory budget per run; when set, T is derived per algorithm.
  std::optional<long> trajectory_budget;
  std::string output_dir = "runs/default";
  bool record_timing = false;
  int threads = 1;

  std::vector<double> sweep_alpha0;
  std::vector<int> sweep_tau0;
  std::vector<int> sweep_k;
};

/// Step-size constant used when run.alpha0 is not given, chosen by a
/// worst-case-over-seeds grid search on the 5-state chain.
double default_alpha0(Algorithm alg);

/// Reads every recognized key; unknown keys raise ConfigError.
ExperimentSpec experiment_from_config(const KeyValueConfig& cfg);

/// Throws ConfigError unless seeds are nonempty and distinct, etc.
void validate(const ExperimentSpec& spec);

/// Largest T whose trajectory count under `alg` stays within `budget`.
int iterations_for_budget(Algorithm alg, long budget);

/// Trajectories consumed by `alg` over T outer iterations.
long trajectories_for(Algorithm alg, int T);

/// Applies the NPGHM_OUTPUT_ROOT prefix to relative directories.
std::string resolve_output_dir(const std::string& dir);

}  // namespace npghm
