#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace npghm {

struct CheckResult {
  std::string name;
  std::string module;
  std::string bound;     // what had to hold, human-readable
  std::string measured;  // what was observed
  bool pass = false;
  double seconds = 0.0;
};

struct Check {
  std::string name;
  std::string module;  // env_core, policy, estimators, natural_gradient, algorithms, oracles, harness
  int criterion = 0;   // acceptance criterion number, 0 if none
  std::function<CheckResult()> run;
};

/// Every numerical invariant, with fixed seeds.
const std::vector<Check>& verification_checks();

/// The ten acceptance criteria, in order.
std::vector<Check> acceptance_checks();

/// Runs the checks whose module or name matches an entry of `only` (all
/// when `only` is empty). Unknown filters raise ConfigError. Each result is
/// printed to `progress` as it completes.
std::vector<CheckResult> run_checks(const std::vector<Check>& checks,
                                    const std::vector<std::string>& only, std::ostream* progress);

std::string format_result_line(const CheckResult& r);
nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace npghm
