#pragma once

#include "npghm/common.hpp"
#include "npghm/policy.hpp"

#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace npghm {

// The NPG direction solves
//   min_w  1/2 E_{(s,a) ~ d~}[(w^T grad log pi(a|s))^2] - w^T u,
// whose minimizer is F^{-1} u. All stochastic solvers below see the problem
// only through i.i.d. score vectors x_k = grad log pi(a_k|s_k).

enum class SubproblemKind { kSgdAverage, kAdam, kExact };

std::string to_string(SubproblemKind kind);
SubproblemKind parse_subproblem_kind(const std::string& name);

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct SubproblemConfig {
  SubproblemKind kind = SubproblemKind::kSgdAverage;
  int iterations = 100;         // K
  std::optional<double> eta;    // SGD step; defaults to 1/(4 M_g)
  double damping = 1e-3;        // exact solver only
  AdamParams adam;
  bool warm_start = false;      // start from the previous direction instead of 0
};

/// Draws one score vector.
using ScoreSampler = std::function<Vec(Rng&)>;

/// Averaged SGD on the compatible least-squares objective:
///   w^{k+1} = w^k - eta ((x_k^T w^k) x_k - u),  output (1/(K+1)) sum_{k=0}^K w^k.
/// K = 0 returns w0.
Vec npg_sgd(const ScoreSampler& sampler, const Vec& u, int iterations, double eta, const Vec& w0,
            Rng& rng);

/// Adam on the same objective, returning the last iterate.
Vec adam_subsolver(const ScoreSampler& sampler, const Vec& u, int iterations,
                   const AdamParams& params, const Vec& w0, Rng& rng);

/// (F + damping I)^{-1} u for damping > 0; the Moore-Penrose solution F^+ u
/// (eigenvalues below 1e-10 ||F|| discarded) for damping = 0.
Vec exact_npg_direction(const Mat& fim, const Vec& u, double damping);

/// Mean of x x^T over n draws.
Mat estimate_fim(const ScoreSampler& sampler, Index dim, int n_samples, Rng& rng);

/// 48 kappa^4 (sqrt(2d) + 1)^2, rounded up.
double recommended_iterations(double kappa, Index dim);

/// 1 / (4 max(M_g declared, M_g measured)).
double default_eta(double declared_mg, std::optional<double> measured_mg = std::nullopt);

/// Adapts a (state, action) sampler and a policy into a score sampler.
template <DifferentiablePolicy P, class StateActionSampler>
  requires std::invocable<StateActionSampler&, Rng&>
ScoreSampler score_sampler(StateActionSampler sampler, P policy) {
  return [sampler = std::move(sampler), policy = std::move(policy)](Rng& rng) mutable -> Vec {
    const auto [s, a] = sampler(rng);
    return policy.score(s, a);
  };
}

/// Runs the configured stochastic solver (SGD or Adam) against `policy`.
template <DifferentiablePolicy P, class StateActionSampler>
Vec solve_subproblem(StateActionSampler sampler, const P& policy, const Vec& u,
                     const SubproblemConfig& cfg, Rng& rng, const Vec* warm = nullptr) {
  require_dim(u.size(), policy.dim(), "solve_subproblem u");
  const Vec w0 = (cfg.warm_start && warm != nullptr) ? *warm : Vec::Zero(u.size());
  const ScoreSampler scores = score_sampler(std::move(sampler), policy);
  switch (cfg.kind) {
    case SubproblemKind::kSgdAverage:
      return npg_sgd(scores, u, cfg.iterations, cfg.eta.value_or(default_eta(policy.declared_mg())),
                     w0, rng);
    case SubproblemKind::kAdam:
      return adam_subsolver(scores, u, cfg.iterations, cfg.adam, w0, rng);
    case SubproblemKind::kExact:
      break;
  }
  throw ConfigError("solve_subproblem: the exact solver needs an exact FIM");
}

}  // namespace npghm
