#include "npghm/oracles.hpp"

#include <cmath>
#include <limits>

namespace npghm {

namespace {

void check_table(const TabularMdp& mdp, const Mat& table) {
  if (table.rows() != mdp.n_states() || table.cols() != mdp.n_actions()) {
    throw ConfigError("policy table shape does not match the MDP");
  }
}

/// P_pi(s, s') and r_pi(s).
std::pair<Mat, Vec> policy_dynamics(const TabularMdp& mdp, const Mat& table) {
  const int ns = mdp.n_states();
  Mat p = Mat::Zero(ns, ns);
  Vec r = Vec::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double pi = table(s, a);
      if (pi == 0.0) continue;
      r[s] += pi * mdp.expected_reward(s, a);
      for (int t = 0; t < ns; ++t) p(s, t) += pi * mdp.transition(s, a, t);
    }
  }
  return {p, r};
}

Mat resolvent_system(const TabularMdp& mdp, const Mat& p_pi) {
  return Mat::Identity(p_pi.rows(), p_pi.cols()) - mdp.gamma() * p_pi;
}

/// Q(s,a) = sum_{s'} P(s'|s,a) (r(s,a,s') + gamma V(s')).
Mat q_from_v(const TabularMdp& mdp, const Vec& v) {
  Mat q(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double acc = 0.0;
      for (int t = 0; t < mdp.n_states(); ++t) {
        acc += mdp.transition(s, a, t) * (mdp.reward(s, a, t) + mdp.gamma() * v[t]);
      }
      q(s, a) = acc;
    }
  }
  return q;
}

/// sum_{s,a} weight(s) pi(a|s) coeff(s,a) score(s,a).
Vec weighted_score_sum(const TabularSoftmaxPolicy& policy, const Mat& table, const Vec& weight,
                       const Mat& coeff) {
  Vec g = Vec::Zero(policy.dim());
  for (int s = 0; s < policy.n_states(); ++s) {
    if (weight[s] == 0.0) continue;
    for (int a = 0; a < policy.n_actions(); ++a) {
      const double c = weight[s] * table(s, a) * coeff(s, a);
      if (c != 0.0) g.noalias() += c * policy.score(s, a);
    }
  }
  return g;
}

}  // namespace

ValueFunctions exact_value(const TabularMdp& mdp, const Mat& policy_table) {
  check_table(mdp, policy_table);
  const auto [p_pi, r_pi] = policy_dynamics(mdp, policy_table);
  ValueFunctions out;
  out.v = resolvent_system(mdp, p_pi).partialPivLu().solve(r_pi);
  out.q = q_from_v(mdp, out.v);
  out.advantage = out.q.colwise() - out.v;
  return out;
}

ValueFunctions exact_value(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  check_compatible(mdp, policy);
  return exact_value(mdp, policy.probability_table());
}

Vec exact_visitation(const TabularMdp& mdp, const Mat& policy_table) {
  check_table(mdp, policy_table);
  const auto [p_pi, r_pi] = policy_dynamics(mdp, policy_table);
  // d^T (I - gamma P_pi) = (1 - gamma) rho^T.
  const Mat system = resolvent_system(mdp, p_pi).transpose();
  return system.partialPivLu().solve((1.0 - mdp.gamma()) * mdp.init_dist());
}

double exact_return(const TabularMdp& mdp, const Mat& policy_table) {
  return mdp.init_dist().dot(exact_value(mdp, policy_table).v);
}

double exact_return(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  check_compatible(mdp, policy);
  return exact_return(mdp, policy.probability_table());
}

double exact_truncated_return(const TabularMdp& mdp, const Mat& policy_table, int horizon) {
  check_table(mdp, policy_table);
  if (horizon < 1) throw ConfigError("exact_truncated_return: horizon must be >= 1");
  const auto [p_pi, r_pi] = policy_dynamics(mdp, policy_table);
  Vec v = Vec::Zero(mdp.n_states());
  for (int k = 0; k < horizon; ++k) v = r_pi + mdp.gamma() * p_pi * v;
  return mdp.init_dist().dot(v);
}

Vec exact_policy_gradient(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  check_compatible(mdp, policy);
  const Mat table = policy.probability_table();
  const ValueFunctions vf = exact_value(mdp, table);
  const Vec d = exact_visitation(mdp, table);
  return weighted_score_sum(policy, table, d, vf.q) / (1.0 - mdp.gamma());
}

Vec exact_policy_gradient_advantage(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  check_compatible(mdp, policy);
  const Mat table = policy.probability_table();
  const ValueFunctions vf = exact_value(mdp, table);
  const Vec d = exact_visitation(mdp, table);
  return weighted_score_sum(policy, table, d, vf.advantage) / (1.0 - mdp.gamma());
}

Vec exact_truncated_gradient(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                             int horizon) {
  check_compatible(mdp, policy);
  if (horizon < 1) throw ConfigError("exact_truncated_gradient: horizon must be >= 1");
  const Mat table = policy.probability_table();
  const auto [p_pi, r_pi] = policy_dynamics(mdp, table);
  // E[sum_h score_h sum_{i>=h} gamma^i r^i] = sum_h gamma^h E[score_h Q_{H-h}(s_h, a_h)],
  // with Q_k the k-step-remaining action value.
  std::vector<Mat> q_remaining(horizon + 1);
  Vec v = Vec::Zero(mdp.n_states());
  for (int k = 1; k <= horizon; ++k) {
    q_remaining[k] = q_from_v(mdp, v);
    v = (table.cwiseProduct(q_remaining[k])).rowwise().sum();
  }
  Vec occupancy = mdp.init_dist();
  Vec g = Vec::Zero(policy.dim());
  double discount = 1.0;
  for (int h = 0; h < horizon; ++h) {
    g += discount * weighted_score_sum(policy, table, occupancy, q_remaining[horizon - h]);
    occupancy = p_pi.transpose() * occupancy;
    discount *= mdp.gamma();
  }
  return g;
}

Mat exact_fim(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  check_compatible(mdp, policy);
  const Mat table = policy.probability_table();
  const Vec d = exact_visitation(mdp, table);
  Mat fim = Mat::Zero(policy.dim(), policy.dim());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double w = d[s] * table(s, a);
      if (w == 0.0) continue;
      const Vec g = policy.score(s, a);
      fim.noalias() += w * g * g.transpose();
    }
  }
  return 0.5 * (fim + fim.transpose());
}

Mat greedy_table(const Mat& q) {
  Mat table = Mat::Zero(q.rows(), q.cols());
  for (Index s = 0; s < q.rows(); ++s) {
    Index best = 0;
    for (Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) > q(s, best) + 1e-12) best = a;
    }
    table(s, best) = 1.0;
  }
  return table;
}

OptimalSolution solve_optimal(const TabularMdp& mdp, double tolerance) {
  OptimalSolution out;
  Vec v = Vec::Zero(mdp.n_states());
  constexpr int kMaxIterations = 1'000'000;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Mat q = q_from_v(mdp, v);
    const Vec next = q.rowwise().maxCoeff();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    out.iterations = it;
    if (change <= tolerance) break;
  }
  out.greedy_table = greedy_table(q_from_v(mdp, v));
  out.v = exact_value(mdp, out.greedy_table).v;
  out.j_star = mdp.init_dist().dot(out.v);
  return out;
}

double optimal_return(const TabularMdp& mdp) { return solve_optimal(mdp).j_star; }

double compatible_approx_error(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy,
                               const Vec& w) {
  check_compatible(mdp, policy);
  require_dim(w.size(), policy.dim(), "compatible_approx_error w");
  const Mat table = policy.probability_table();
  const ValueFunctions vf = exact_value(mdp, table);
  const Vec d = exact_visitation(mdp, table);
  double total = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double mass = d[s] * table(s, a);
      if (mass == 0.0) continue;
      const double resid = (1.0 - mdp.gamma()) * w.dot(policy.score(s, a)) - vf.advantage(s, a);
      total += mass * resid * resid;
    }
  }
  return 0.5 * total;
}

double approximation_bias(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy, const Vec& w) {
  check_compatible(mdp, policy);
  require_dim(w.size(), policy.dim(), "approximation_bias w");
  const ValueFunctions vf = exact_value(mdp, policy);
  const Mat optimal = solve_optimal(mdp).greedy_table;
  const Vec d_star = exact_visitation(mdp, optimal);
  double total = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double mass = d_star[s] * optimal(s, a);
      if (mass == 0.0) continue;
      const double resid = vf.advantage(s, a) - (1.0 - mdp.gamma()) * w.dot(policy.score(s, a));
      total += mass * resid * resid;
    }
  }
  return total;
}

double performance_difference(const TabularMdp& mdp, const Mat& target_table,
                              const Mat& reference_table) {
  check_table(mdp, target_table);
  const ValueFunctions ref = exact_value(mdp, reference_table);
  const Vec d = exact_visitation(mdp, target_table);
  double total = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      total += d[s] * target_table(s, a) * ref.advantage(s, a);
    }
  }
  return total / (1.0 - mdp.gamma());
}

ConstantsBundle compute_constants(double mg, double mh, double mu_f, double gamma, int horizon) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("compute_constants: gamma must lie in [0,1)");
  if (!(mg > 0.0 && mh > 0.0)) throw DomainError("compute_constants: M_g and M_h must be positive");
  if (!(mu_f >= 0.0)) throw DomainError("compute_constants: mu_F must be nonnegative");
  if (horizon < 0) throw DomainError("compute_constants: horizon must be nonnegative");
  const double one_minus = 1.0 - gamma;
  const double h = horizon;
  ConstantsBundle c;
  c.mg = mg;
  c.mh = mh;
  c.mu_f = mu_f;
  c.kappa = mu_f > 0.0 ? mg / mu_f : std::numeric_limits<double>::infinity();
  c.smoothness = (mg + mh) / (one_minus * one_minus);
  c.grad_variance = mg / std::pow(one_minus, 3);
  c.hessian_variance = 2.0 * h * h * mg * mg / std::pow(one_minus, 3) +
                       2.0 * mh * mh / std::pow(one_minus, 4);
  c.grad_truncation = std::sqrt(mg) / one_minus * std::sqrt(1.0 / one_minus + h);
  c.hessian_truncation = (mg + mh) / one_minus * (1.0 / one_minus + h);
  c.grad_norm_bound = std::sqrt(mg) / std::pow(one_minus, 1.5);
  return c;
}

double theoretical_alpha0(const ConstantsBundle& c, double tau0) {
  const double denom =
      c.kappa * tau0 * (12.0 * c.smoothness * c.smoothness + 6.0 * c.hessian_variance);
  return std::sqrt(c.mu_f * c.mu_f / denom);
}

LqrSolution solve_lqr(const PointMassEnv& env) {
  const auto& p = env.params();
  LqrSolution out;
  const double scale = p.q_s * p.state_radius * p.state_radius +
                       p.q_a * p.action_radius * p.action_radius;
  if (scale == 0.0) return out;
  const double g = p.gamma;
  const double a = p.a_dyn;
  const double b = p.b_dyn;
  // Discounted scalar Riccati map:
  //   P = q_s + g a^2 P - (g a b P)^2 / (q_a + g b^2 P).
  auto riccati = [&](double pr) {
    const double denom = p.q_a + g * b * b * pr;
    const double gain_term = denom > 0.0 ? (g * a * b * pr) * (g * a * b * pr) / denom : 0.0;
    return p.q_s + g * a * a * pr - gain_term;
  };
  double pr = p.q_s;
  constexpr int kMaxIterations = 10'000'000;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    const double next = riccati(pr);
    if (!std::isfinite(next) || next > 1e300) throw DomainError("solve_lqr: Riccati iteration diverged");
    const double change = std::abs(next - pr);
    pr = next;
    if (change <= 1e-15 * std::max(1.0, std::abs(pr))) break;
  }
  if (it == kMaxIterations) throw DomainError("solve_lqr: Riccati iteration did not converge");
  out.riccati = pr;
  out.residual = std::abs(pr - riccati(pr));
  const double init_second_moment = p.init_radius * p.init_radius / 3.0;
  const double noise_cost = g * pr * p.noise_std * p.noise_std / (1.0 - g);
  out.j_star = -(pr * init_second_moment + noise_cost) / scale;
  return out;
}

double lqr_optimal_return(const PointMassEnv& env) { return solve_lqr(env).j_star; }

ExactMdpQuantities compute_exact(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  check_compatible(mdp, policy);
  const Mat table = policy.probability_table();
  const ValueFunctions vf = exact_value(mdp, table);
  ExactMdpQuantities out;
  out.v = vf.v;
  out.q = vf.q;
  out.advantage = vf.advantage;
  out.visitation = exact_visitation(mdp, table);
  out.grad_j = weighted_score_sum(policy, table, out.visitation, vf.q) / (1.0 - mdp.gamma());
  out.fim = exact_fim(mdp, policy);
  out.j_rho = mdp.init_dist().dot(vf.v);
  out.j_star = optimal_return(mdp);
  return out;
}

nlohmann::json to_json(const ExactMdpQuantities& q) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto mat = [](const Mat& m) {
    std::vector<std::vector<double>> rows(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
      rows[i].resize(m.cols());
      for (Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
    }
    return rows;
  };
  return nlohmann::json{{"V", vec(q.v)},
                        {"Q", mat(q.q)},
                        {"A", mat(q.advantage)},
                        {"visitation", vec(q.visitation)},
                        {"grad_J", vec(q.grad_j)},
                        {"fim", mat(q.fim)},
                        {"J_rho", q.j_rho},
                        {"J_star", q.j_star}};
}

}  // namespace npghm
