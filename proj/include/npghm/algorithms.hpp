#pragma once

#include "npghm/common.hpp"
#include "npghm/estimators.hpp"
#include "npghm/natural_gradient.hpp"
#include "npghm/oracles.hpp"
#include "npghm/policy.hpp"
#include "npghm/rng.hpp"
#include "npghm/sampling.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace npghm {

struct Schedule {
  double beta = 1.0;   // tau0 / (t + tau0)
  double alpha = 0.0;  // alpha0 sqrt(beta)
  int horizon = 1;
  bool regime_warning = false;  // tau0 < 20
};

/// H = ceil(log(T + tau0) / (-log gamma)), at least 1.
int auto_horizon(double gamma, int T, int tau0);

Schedule schedule(int t, int tau0, double alpha0, double gamma, int T);

enum class Algorithm { kNpgHm, kVanillaPg, kHarpg, kMnpg };

std::string to_string(Algorithm alg);
Algorithm parse_algorithm(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

enum class StepRule {
  kScheduled,  // alpha_t = alpha0 sqrt(tau0 / (t + tau0))
  kConstant,   // alpha_t = alpha0
};

struct RunConfig {
  int T = 100;
  int tau0 = 20;
  double alpha0 = 0.1;
  StepRule step_rule = StepRule::kScheduled;
  std::optional<int> horizon;  // empty: auto
  SubproblemConfig subproblem;
  std::uint64_t seed = 1;
  int eval_interval = 10;
  int eval_trajectories = 50;  // Monte Carlo evaluation on continuous tasks
  /// Replaces the algorithm's momentum coefficient at every t.
  std::optional<double> momentum_beta;
};

int resolve_horizon(const RunConfig& cfg, double gamma);
double step_size(const RunConfig& cfg, int t, double gamma);

struct IterateRecord {
  int t = 0;
  long trajectories = 0;  // sampled so far, evaluation excluded
  std::optional<double> u_norm;
  std::optional<double> w_norm;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> j_hat;
  std::optional<double> gap;
};

struct RunResult {
  Vec theta;
  std::vector<IterateRecord> records;
  long trajectories = 0;
  int horizon = 0;
  int flagged_weights = 0;  // MNPG importance weights above exp(30)
};

/// Raised when u_t or w_t stops being finite. Carries the momentum state at
/// the failing step for post-mortem.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, int t, MomentumState state, Vec theta)
      : std::runtime_error(what), t(t), state(std::move(state)), theta(std::move(theta)) {}

  int t;
  MomentumState state;
  Vec theta;
};

struct Evaluation {
  double j_hat = 0.0;
  std::optional<double> gap;
};

template <class P>
using DirectionSolver = std::function<Vec(const P& policy, const Vec& u, Rng& rng, const Vec* previous)>;

template <class P>
using Evaluator = std::function<Evaluation(const P& policy, Rng& rng)>;

/// Everything an observer may want to inspect after one outer iteration.
template <class P>
struct IterationTrace {
  int t = 0;
  const Vec* theta = nullptr;  // theta_t, before the step
  const Vec* u = nullptr;
  const Vec* w = nullptr;
  const Trajectory<typename P::State, typename P::Action>* traj = nullptr;
};

template <class P>
struct RunHooks {
  DirectionSolver<P> solver;  // empty: w_t = u_t
  Evaluator<P> evaluator;     // empty: no evaluation
  std::function<void(const IterationTrace<P>&)> observer;
};

template <class P>
DirectionSolver<P> identity_solver() {
  return [](const P&, const Vec& u, Rng&, const Vec*) { return u; };
}

/// Averaged SGD (or Adam) on scores drawn from d~ by geometric-horizon rollouts.
template <Environment Env, DifferentiablePolicy P>
DirectionSolver<P> stochastic_solver(const Env& env, const SubproblemConfig& cfg) {
  return [env, cfg](const P& policy, const Vec& u, Rng& rng, const Vec* previous) {
    auto sampler = [&env, &policy](Rng& r) { return sample_state_action(env, policy, r); };
    return solve_subproblem(sampler, policy, u, cfg, rng, previous);
  };
}

/// (F(theta) + damping I)^{-1} u with the exact FIM of a tabular softmax policy.
DirectionSolver<TabularSoftmaxPolicy> exact_tabular_solver(const TabularMdp& mdp, double damping);

template <Environment Env, DifferentiablePolicy P>
DirectionSolver<P> make_direction_solver(const Env& env, const SubproblemConfig& cfg) {
  if (cfg.kind == SubproblemKind::kExact) {
    if constexpr (std::same_as<Env, TabularMdp> && std::same_as<P, TabularSoftmaxPolicy>) {
      return exact_tabular_solver(env, cfg.damping);
    } else {
      throw ConfigError("the exact sub-problem solver needs a tabular MDP and softmax policy");
    }
  }
  return stochastic_solver<Env, P>(env, cfg);
}

/// Exact J and gap J* - J.
Evaluator<TabularSoftmaxPolicy> exact_evaluator(const TabularMdp& mdp);

/// Mean discounted return of `n` truncated rollouts; no gap.
template <Environment Env, DifferentiablePolicy P>
Evaluator<P> monte_carlo_evaluator(const Env& env, int n, int horizon) {
  return [env, n, horizon](const P& policy, Rng& rng) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += discounted_return(sample_trajectory(env, policy, horizon, rng), env.gamma());
    }
    return Evaluation{total / n, std::nullopt};
  };
}

template <Environment Env, DifferentiablePolicy P>
Evaluator<P> default_evaluator(const Env& env, const RunConfig& cfg) {
  if constexpr (std::same_as<Env, TabularMdp> && std::same_as<P, TabularSoftmaxPolicy>) {
    return exact_evaluator(env);
  } else {
    return monte_carlo_evaluator<Env, P>(env, cfg.eval_trajectories, resolve_horizon(cfg, env.gamma()));
  }
}

template <Environment Env, DifferentiablePolicy P>
RunHooks<P> default_hooks(const Env& env, const RunConfig& cfg) {
  return RunHooks<P>{make_direction_solver<Env, P>(env, cfg.subproblem),
                     default_evaluator<Env, P>(env, cfg), {}};
}

namespace detail {

inline void check_config(const RunConfig& cfg) {
  if (cfg.T < 1) throw ConfigError("T must be >= 1");
  if (cfg.tau0 < 1) throw ConfigError("tau0 must be >= 1");
  if (!(cfg.alpha0 >= 0.0) || !std::isfinite(cfg.alpha0)) throw ConfigError("alpha0 must be finite and >= 0");
  if (cfg.horizon && *cfg.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (cfg.eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (cfg.eval_trajectories < 1) throw ConfigError("eval_trajectories must be >= 1");
  if (cfg.momentum_beta) check_momentum_beta(*cfg.momentum_beta);
}

inline bool evaluates_at(const RunConfig& cfg, int t) {
  return t == 1 || t == cfg.T || t % cfg.eval_interval == 0;
}

template <class P>
void evaluate_into(IterateRecord& rec, const RunHooks<P>& hooks, const P& policy, Rng& rng) {
  if (!hooks.evaluator) return;
  const Evaluation e = hooks.evaluator(policy, rng);
  rec.j_hat = e.j_hat;
  rec.gap = e.gap;
}

inline void check_finite(const Vec& v, const char* name, int t, const MomentumState& state,
                         const Vec& theta) {
  if (!v.allFinite()) {
    throw NumericalAbort(std::string("non-finite ") + name + " at t = " + std::to_string(t), t,
                         state, theta);
  }
}

enum class MomentumKind { kHessian, kImportance, kNone };

/// Shared outer loop. `beta_of(t)` is the momentum coefficient and
/// `use_solver` selects between an NPG step and a plain gradient step.
template <Environment Env, DifferentiablePolicy P, class BetaRule>
RunResult run_loop(const Env& env, const P& policy, const RunConfig& cfg, const RunHooks<P>& hooks,
                   MomentumKind kind, BetaRule beta_of) {
  check_config(cfg);
  check_compatible(env, policy);
  RunStreams streams(cfg.seed);
  const double gamma = env.gamma();
  const int horizon = resolve_horizon(cfg, gamma);

  RunResult result;
  result.horizon = horizon;
  Vec theta = policy.params();
  MomentumState state;
  Vec w_prev;
  for (int t = 1; t < cfg.T; ++t) {
    check_finite(theta, "theta", t, state, theta);
    const P current = policy.with_params(theta);
    IterateRecord rec;
    rec.t = t;
    const double beta = cfg.momentum_beta.value_or(beta_of(t));
    auto traj = sample_trajectory(env, current, horizon, streams.trajectory);
    ++result.trajectories;
    if (t == 1 || kind == MomentumKind::kNone) {
      state = initial_momentum(truncated_grad(traj, current, gamma), theta);
      state.t = t;
    } else if (kind == MomentumKind::kHessian) {
      const double q = uniform01(streams.interpolation);
      const Vec theta_hat = q * theta + (1.0 - q) * state.prev_theta;
      const auto traj_hat =
          sample_trajectory(env, policy.with_params(theta_hat), horizon, streams.trajectory);
      ++result.trajectories;
      state = momentum_update_hessian(state, theta, traj, traj_hat, theta_hat, beta, policy, gamma);
    } else {
      ImportanceWeight weight;
      state = momentum_update_is(state, theta, traj, beta, policy, gamma, &weight);
      if (weight.flagged) ++result.flagged_weights;
    }
    check_finite(state.u, "u", t, state, theta);

    Vec w = hooks.solver ? hooks.solver(current, state.u, streams.subproblem,
                                        w_prev.size() ? &w_prev : nullptr)
                         : state.u;
    check_finite(w, "w", t, state, theta);

    const double alpha = step_size(cfg, t, gamma);
    rec.trajectories = result.trajectories;
    rec.u_norm = state.u.norm();
    rec.w_norm = w.norm();
    rec.alpha = alpha;
    if (kind != MomentumKind::kNone) rec.beta = beta;
    if (evaluates_at(cfg, t)) evaluate_into(rec, hooks, current, streams.evaluation);
    if (hooks.observer) hooks.observer(IterationTrace<P>{t, &theta, &state.u, &w, &traj});

    if (alpha != 0.0) theta += alpha * w;
    w_prev = std::move(w);
    result.records.push_back(rec);
  }
  check_finite(theta, "theta", cfg.T, state, theta);
  IterateRecord last;
  last.t = cfg.T;
  last.trajectories = result.trajectories;
  evaluate_into(last, hooks, policy.with_params(theta), streams.evaluation);
  result.records.push_back(last);
  result.theta = std::move(theta);
  return result;
}

}  // namespace detail

/// NPG-HM: Hessian-aided momentum estimate, NPG direction from the
/// sub-problem solver, theta_{t+1} = theta_t + alpha_t w_t.
template <Environment Env, DifferentiablePolicy P>
RunResult run_npg_hm(const Env& env, const P& policy, const RunConfig& cfg, const RunHooks<P>& hooks) {
  const double tau0 = cfg.tau0;
  return detail::run_loop(env, policy, cfg, hooks, detail::MomentumKind::kHessian,
                          [tau0](int t) { return tau0 / (t + tau0); });
}

/// theta_{t+1} = theta_t + alpha_t g(tau_t; theta_t); the solver hook is ignored.
template <Environment Env, DifferentiablePolicy P>
RunResult run_vanilla_pg(const Env& env, const P& policy, const RunConfig& cfg, RunHooks<P> hooks) {
  hooks.solver = nullptr;
  return detail::run_loop(env, policy, cfg, hooks, detail::MomentumKind::kNone,
                          [](int) { return 1.0; });
}

/// Hessian-aided recursive PG: theta_{t+1} = theta_t + alpha_t u_t with
/// beta_t = 2 / (t + 2); the solver hook is ignored.
template <Environment Env, DifferentiablePolicy P>
RunResult run_harpg(const Env& env, const P& policy, const RunConfig& cfg, RunHooks<P> hooks) {
  hooks.solver = nullptr;
  return detail::run_loop(env, policy, cfg, hooks, detail::MomentumKind::kHessian,
                          [](int t) { return 2.0 / (t + 2.0); });
}

/// Importance-sampling momentum with beta = 0.5 and an NPG direction.
template <Environment Env, DifferentiablePolicy P>
RunResult run_mnpg(const Env& env, const P& policy, const RunConfig& cfg, const RunHooks<P>& hooks) {
  return detail::run_loop(env, policy, cfg, hooks, detail::MomentumKind::kImportance,
                          [](int) { return 0.5; });
}

template <Environment Env, DifferentiablePolicy P>
RunResult run_algorithm(Algorithm alg, const Env& env, const P& policy, const RunConfig& cfg,
                        const RunHooks<P>& hooks) {
  switch (alg) {
    case Algorithm::kNpgHm: return run_npg_hm(env, policy, cfg, hooks);
    case Algorithm::kVanillaPg: return run_vanilla_pg(env, policy, cfg, hooks);
    case Algorithm::kHarpg: return run_harpg(env, policy, cfg, hooks);
    case Algorithm::kMnpg: return run_mnpg(env, policy, cfg, hooks);
  }
  throw ConfigError("unknown algorithm");
}

template <Environment Env, DifferentiablePolicy P>
RunResult run_algorithm(Algorithm alg, const Env& env, const P& policy, const RunConfig& cfg) {
  return run_algorithm(alg, env, policy, cfg, default_hooks<Env, P>(env, cfg));
}

}  // namespace npghm
