#pragma once

// Reference computations for the unit tests. Each one is deliberately
// written a different way from the library: brute-force enumeration,
// fixed-point iteration, O(H^2) double sums and finite differences.

#include "npghm/common.hpp"
#include "npghm/sampling.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/tabular_mdp.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using npghm::Mat;
using npghm::Vec;

inline Vec random_vec(Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Vec v(d);
  for (auto& x : v) x = n(rng);
  return v;
}

/// Builds an MDP from nested P[s][a][s'] and expected rewards R[s][a].
inline npghm::TabularMdp make_mdp(const std::vector<std::vector<std::vector<double>>>& p,
                                  const std::vector<std::vector<double>>& r, std::vector<double> rho,
                                  double gamma) {
  const int ns = static_cast<int>(p.size());
  const int na = static_cast<int>(p[0].size());
  std::vector<double> tp, tr;
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a)
      for (int t = 0; t < ns; ++t) {
        tp.push_back(p[s][a][t]);
        tr.push_back(r[s][a]);
      }
  return npghm::TabularMdp(ns, na, tp, tr, Eigen::Map<Vec>(rho.data(), ns), gamma);
}

/// Policy table computed straight from the logits.
inline Mat softmax_table(const Vec& theta, int ns, int na) {
  Mat t(ns, na);
  for (int s = 0; s < ns; ++s) {
    double z = 0.0;
    for (int a = 0; a < na; ++a) z += std::exp(theta[s * na + a]);
    for (int a = 0; a < na; ++a) t(s, a) = std::exp(theta[s * na + a]) / z;
  }
  return t;
}

inline double expected_r(const npghm::TabularMdp& m, int s, int a) {
  double r = 0.0;
  for (int t = 0; t < m.n_states(); ++t) r += m.transition(s, a, t) * m.reward(s, a, t);
  return r;
}

/// Sum over every (s_0, a_0, ..., a_{H-1}) path of its probability times its
/// discounted return.
inline double enumerate_truncated_return(const npghm::TabularMdp& m, const Mat& pi, int horizon) {
  std::function<double(int, int, double, double)> walk = [&](int s, int h, double prob,
                                                             double discount) -> double {
    if (h == horizon || prob == 0.0) return 0.0;
    double total = 0.0;
    for (int a = 0; a < m.n_actions(); ++a) {
      const double pa = prob * pi(s, a);
      total += pa * discount * expected_r(m, s, a);
      for (int t = 0; t < m.n_states(); ++t) {
        total += walk(t, h + 1, pa * m.transition(s, a, t), discount * m.gamma());
      }
    }
    return total;
  };
  double j = 0.0;
  for (int s = 0; s < m.n_states(); ++s) j += walk(s, 0, m.init_dist()[s], 1.0);
  return j;
}

/// Forward occupancy recursion for J^H.
inline double forward_truncated_return(const npghm::TabularMdp& m, const Mat& pi, int horizon) {
  Vec occ = m.init_dist();
  double j = 0.0;
  double discount = 1.0;
  for (int h = 0; h < horizon; ++h) {
    Vec next = Vec::Zero(m.n_states());
    for (int s = 0; s < m.n_states(); ++s)
      for (int a = 0; a < m.n_actions(); ++a) {
        j += discount * occ[s] * pi(s, a) * expected_r(m, s, a);
        for (int t = 0; t < m.n_states(); ++t) next[t] += occ[s] * pi(s, a) * m.transition(s, a, t);
      }
    occ = next;
    discount *= m.gamma();
  }
  return j;
}

/// Policy evaluation by repeated Bellman backups.
inline Vec iterate_value(const npghm::TabularMdp& m, const Mat& pi, int sweeps = 20000) {
  Vec v = Vec::Zero(m.n_states());
  for (int k = 0; k < sweeps; ++k) {
    Vec next = Vec::Zero(m.n_states());
    for (int s = 0; s < m.n_states(); ++s)
      for (int a = 0; a < m.n_actions(); ++a) {
        double q = 0.0;
        for (int t = 0; t < m.n_states(); ++t) q += m.transition(s, a, t) * (m.reward(s, a, t) + m.gamma() * v[t]);
        next[s] += pi(s, a) * q;
      }
    if ((next - v).cwiseAbs().maxCoeff() < 1e-15) return next;
    v = next;
  }
  return v;
}

inline double iterate_return(const npghm::TabularMdp& m, const Mat& pi) {
  return m.init_dist().dot(iterate_value(m, pi));
}

/// Central differences of f at theta.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& theta, double eps = 1e-5) {
  Vec g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vec p = theta, m = theta;
    p[i] += eps;
    m[i] -= eps;
    g[i] = (f(p) - f(m)) / (2 * eps);
  }
  return g;
}

/// O(H^2) double sum: sum_h (sum_{i>=h} gamma^i r_i) score_h.
template <class P>
Vec naive_truncated_grad(const npghm::Trajectory<typename P::State, typename P::Action>& traj,
                         const P& policy, double gamma) {
  Vec g = Vec::Zero(policy.dim());
  for (int h = 0; h < traj.horizon(); ++h) {
    double togo = 0.0;
    for (int i = h; i < traj.horizon(); ++i) togo += std::pow(gamma, i) * traj.rewards[i];
    g += togo * policy.score(traj.states[h], traj.actions[h]);
  }
  return g;
}

/// Mean and standard error of a scalar sample.
struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m.mean) * (x - m.mean);
  var /= static_cast<double>(xs.size() - 1);
  m.se = std::sqrt(var / static_cast<double>(xs.size()));
  return m;
}

}  // namespace testing_support
