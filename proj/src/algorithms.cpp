#include "npghm/algorithms.hpp"

#include <cmath>

namespace npghm {

int auto_horizon(double gamma, int T, int tau0) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("auto_horizon: gamma must lie in [0,1)");
  if (gamma == 0.0) return 1;
  const double ratio = std::log(static_cast<double>(T) + tau0) / -std::log(gamma);
  // Exact integer ratios (gamma = 1/2, T + tau0 = 1024) must not round up.
  const double h = std::ceil(ratio - 1e-9 * ratio);
  return std::max(1, static_cast<int>(h));
}

Schedule schedule(int t, int tau0, double alpha0, double gamma, int T) {
  if (t < 1) throw DomainError("schedule: t must be >= 1");
  if (tau0 < 1) throw DomainError("schedule: tau0 must be positive");
  Schedule s;
  s.beta = static_cast<double>(tau0) / (t + tau0);
  s.alpha = alpha0 * std::sqrt(s.beta);
  s.horizon = auto_horizon(gamma, T, tau0);
  s.regime_warning = tau0 < 20;
  return s;
}

std::string to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::kNpgHm: return "npg-hm";
    case Algorithm::kVanillaPg: return "pg";
    case Algorithm::kHarpg: return "harpg";
    case Algorithm::kMnpg: return "mnpg";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "npg-hm" || name == "npghm") return Algorithm::kNpgHm;
  if (name == "pg" || name == "vanilla-pg") return Algorithm::kVanillaPg;
  if (name == "harpg") return Algorithm::kHarpg;
  if (name == "mnpg") return Algorithm::kMnpg;
  throw ConfigError("unknown algorithm '" + name + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algs = {Algorithm::kNpgHm, Algorithm::kVanillaPg,
                                              Algorithm::kHarpg, Algorithm::kMnpg};
  return algs;
}

int resolve_horizon(const RunConfig& cfg, double gamma) {
  return cfg.horizon ? *cfg.horizon : auto_horizon(gamma, cfg.T, cfg.tau0);
}

double step_size(const RunConfig& cfg, int t, double gamma) {
  if (cfg.step_rule == StepRule::kConstant) return cfg.alpha0;
  return schedule(t, cfg.tau0, cfg.alpha0, gamma, cfg.T).alpha;
}

DirectionSolver<TabularSoftmaxPolicy> exact_tabular_solver(const TabularMdp& mdp, double damping) {
  if (!(damping >= 0.0)) throw ConfigError("damping must be nonnegative");
  return [mdp, damping](const TabularSoftmaxPolicy& policy, const Vec& u, Rng&, const Vec*) {
    return exact_npg_direction(exact_fim(mdp, policy), u, damping);
  };
}

Evaluator<TabularSoftmaxPolicy> exact_evaluator(const TabularMdp& mdp) {
  const double j_star = optimal_return(mdp);
  return [mdp, j_star](const TabularSoftmaxPolicy& policy, Rng&) {
    const double j = exact_return(mdp, policy);
    return Evaluation{j, j_star - j};
  };
}

}  // namespace npghm
