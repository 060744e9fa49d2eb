#pragma once

#include "npghm/common.hpp"
#include "npghm/point_mass.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/tabular_mdp.hpp"

#include <nlohmann/json.hpp>

namespace npghm {

// Exact quantities on tabular MDPs, by dense linear algebra. Policies that
// only need action probabilities are passed as n_states x n_actions tables so
// deterministic policies (which softmax cannot represent) work too.

struct ValueFunctions {
  Vec v;          // V(s)
  Mat q;          // Q(s, a)
  Mat advantage;  // Q(s, a) - V(s)
};

/// Solves (I - gamma P_pi) V = r_pi.
ValueFunctions exact_value(const TabularMdp& mdp, const Mat& policy_table);
ValueFunctions exact_value(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);

/// d(s) = (1 - gamma) rho^T (I - gamma P_pi)^{-1}.
Vec exact_visitation(const TabularMdp& mdp, const Mat& policy_table);

/// J(pi) = rho^T V.
double exact_return(const TabularMdp& mdp, const Mat& policy_table);
double exact_return(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);

/// J^H(pi) = E[sum_{h<H} gamma^h r^h].
double exact_truncated_return(const TabularMdp& mdp, const Mat& policy_table, int horizon);

/// (1/(1-gamma)) sum_{s,a} d(s) pi(a|s) score(s,a) Q(s,a).
Vec exact_policy_gradient(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);
/// Same sum with A in place of Q.
Vec exact_policy_gradient_advantage(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);

/// Gradient of J^H by a backward pass over remaining-horizon Q functions and
/// a forward pass over step-indexed state occupancies.
Vec exact_truncated_gradient(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy, int horizon);

/// sum_{s,a} d(s) pi(a|s) score score^T.
Mat exact_fim(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);

struct OptimalSolution {
  Vec v;             // V* of the greedy policy (evaluated exactly)
  Mat greedy_table;  // deterministic optimal policy, ties to the lowest action
  double j_star = 0.0;
  int iterations = 0;
};

/// Value iteration to sup-norm change 1e-10, then exact evaluation of the
/// greedy policy.
OptimalSolution solve_optimal(const TabularMdp& mdp, double tolerance = 1e-10);
double optimal_return(const TabularMdp& mdp);

/// Deterministic table of argmax_a q(s, a), ties to the lowest index.
Mat greedy_table(const Mat& q);

/// L(w; theta) = 1/2 E_{d~_theta}[((1-gamma) w^T score - A)^2].
double compatible_approx_error(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                               const Vec& w);

/// E_{(s,a) ~ d~_{rho, pi*}}[(A^{pi_theta}(s,a) - (1-gamma) w^T score(s,a))^2],
/// with pi* the greedy optimal policy.
double approximation_bias(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy, const Vec& w);

/// Right-hand side of the performance difference lemma,
/// (1/(1-gamma)) E_{d~_{rho, target}}[A^{reference}], which equals
/// J(target) - J(reference).
double performance_difference(const TabularMdp& mdp, const Mat& target_table,
                              const Mat& reference_table);

/// Problem constants from the smoothness, variance and truncation bounds.
struct ConstantsBundle {
  double mg = 0.0;
  double mh = 0.0;
  double mu_f = 0.0;
  double kappa = 0.0;  // M_g / mu_F, +inf when mu_F = 0
  double smoothness = 0.0;         // L = (M_g + M_h) / (1-gamma)^2
  double grad_variance = 0.0;      // nu_g^2 = M_g / (1-gamma)^3
  double hessian_variance = 0.0;   // nu_h^2 = 2 H^2 M_g^2/(1-gamma)^3 + 2 M_h^2/(1-gamma)^4
  double grad_truncation = 0.0;    // G_g = sqrt(M_g)/(1-gamma) sqrt(1/(1-gamma) + H)
  double hessian_truncation = 0.0; // G_h = (M_g + M_h)/(1-gamma) (1/(1-gamma) + H)
  double grad_norm_bound = 0.0;    // sqrt(M_g) / (1-gamma)^{3/2}
};

/// mu_f = 0 is accepted for Fisher-degenerate classes and gives kappa = +inf.
ConstantsBundle compute_constants(double mg, double mh, double mu_f, double gamma, int horizon);

/// alpha_0 = sqrt(mu_F^2 / (kappa tau0 (12 L^2 + 6 nu_h^2))).
double theoretical_alpha0(const ConstantsBundle& c, double tau0);

struct LqrSolution {
  double riccati = 0.0;   // P in V*(s) = -(P s^2 + const) / cost scale
  double residual = 0.0;  // |P - Riccati(P)|
  double j_star = 0.0;
};

/// Optimal discounted return of the point-mass task with the state clip and
/// reward floor removed (a reference value, not the clipped optimum).
LqrSolution solve_lqr(const PointMassEnv& env);
double lqr_optimal_return(const PointMassEnv& env);

struct ExactMdpQuantities {
  Vec v;
  Mat q;
  Mat advantage;
  Vec visitation;
  Vec grad_j;
  Mat fim;
  double j_rho = 0.0;
  double j_star = 0.0;
};

ExactMdpQuantities compute_exact(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);
nlohmann::json to_json(const ExactMdpQuantities& q);

}  // namespace npghm
