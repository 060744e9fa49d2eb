#include "npghm/verification.hpp"

#include "npghm/algorithms.hpp"
#include "npghm/config.hpp"
#include "npghm/estimators.hpp"
#include "npghm/experiment.hpp"
#include "npghm/gaussian_policy.hpp"
#include "npghm/natural_gradient.hpp"
#include "npghm/oracles.hpp"
#include "npghm/point_mass.hpp"
#include "npghm/rng.hpp"
#include "npghm/sampling.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/specs.hpp"
#include "npghm/tabular_mdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace npghm {

namespace {

constexpr std::uint64_t kSeed = 20240611;

Rng stream(const std::string& label) { return make_stream(kSeed, label); }

std::string num(double v) {
  std::ostringstream out;
  out << std::setprecision(4) << v;
  return out.str();
}

Vec random_normal(Index d, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(d);
  for (Index i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

/// Running per-coordinate mean and variance (Welford).
class MeanAccumulator {
 public:
  explicit MeanAccumulator(Index d) : mean_(Vec::Zero(d)), m2_(Vec::Zero(d)) {}

  void add(const Vec& x) {
    ++n_;
    const Vec delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_.array() += delta.array() * (x - mean_).array();
  }

  const Vec& mean() const { return mean_; }
  Vec standard_error() const {
    if (n_ < 2) return Vec::Zero(mean_.size());
    return (m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_)).cwiseSqrt();
  }

 private:
  long n_ = 0;
  Vec mean_;
  Vec m2_;
};

/// Largest |mean - target| / SE over coordinates. A coordinate with zero
/// spread must match exactly (to 1e-12) or the result is +inf.
double max_z(const Vec& mean, const Vec& se, const Vec& target) {
  double worst = 0.0;
  for (Index i = 0; i < mean.size(); ++i) {
    const double diff = std::abs(mean[i] - target[i]);
    if (se[i] == 0.0) {
      if (diff > 1e-12) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, diff / se[i]);
  }
  return worst;
}

struct Testbed {
  std::string name;
  TabularMdp mdp;
};

std::vector<Testbed> tabular_testbeds() {
  return {{"chain2", chain(2)},
          {"chain5", chain(5)},
          {"chain5-slip", chain(5, 0.9, 0.1, 0.2)},
          {"random5x3", random_mdp(5, 3, 7)},
          {"random4x2", random_mdp(4, 2, 11)},
          {"bandit", bandit({1.0, 0.0, 0.5})}};
}

TabularSoftmaxPolicy random_softmax(const TabularMdp& mdp, Rng& rng, double scale = 1.0) {
  return TabularSoftmaxPolicy(mdp.n_states(), mdp.n_actions(),
                              random_normal(static_cast<Index>(mdp.n_states()) * mdp.n_actions(), rng, scale));
}

Mat random_table(int ns, int na, Rng& rng) {
  Mat t(ns, na);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) t(s, a) = -std::log1p(-uniform01(rng));
    t.row(s) /= t.row(s).sum();
  }
  return t;
}

CheckResult result(bool pass, std::string bound, std::string measured) {
  CheckResult r;
  r.pass = pass;
  r.bound = std::move(bound);
  r.measured = std::move(measured);
  return r;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

// ---------------------------------------------------------------- env_core

CheckResult check_visitation_tv() {
  const TabularMdp mdp = chain(5, 0.9, 0.1, 0.1);
  Rng rng = stream("visitation.theta");
  const TabularSoftmaxPolicy policy = random_softmax(mdp, rng);
  const Vec exact = exact_visitation(mdp, policy.probability_table());
  Vec counts = Vec::Zero(mdp.n_states());
  Rng sample_rng = stream("visitation.samples");
  constexpr int kDraws = 1'000'000;
  for (int i = 0; i < kDraws; ++i) counts[sample_state_action(mdp, policy, sample_rng).first] += 1.0;
  const double tv = 0.5 * (counts / kDraws - exact).cwiseAbs().sum();
  return result(tv < 0.01, "TV(empirical d, exact d) < 0.01 at 1e6 draws", "TV " + num(tv));
}

CheckResult check_step_marginals() {
  const TabularMdp mdp = chain(5, 0.9, 0.1, 0.2);
  Rng rng = stream("marginals.theta");
  const TabularSoftmaxPolicy policy = random_softmax(mdp, rng);
  const Mat table = policy.probability_table();
  constexpr int kHorizon = 6;
  constexpr int kTraj = 100'000;
  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  std::vector<Mat> counts(kHorizon, Mat::Zero(ns, na));
  Rng sample_rng = stream("marginals.samples");
  for (int i = 0; i < kTraj; ++i) {
    const auto traj = sample_trajectory(mdp, policy, kHorizon, sample_rng);
    for (int h = 0; h < kHorizon; ++h) counts[h](traj.states[h], traj.actions[h]) += 1.0;
  }
  Vec occ = mdp.init_dist();
  double chi2 = 0.0;
  int dof = 0;
  bool impossible_seen = false;
  for (int h = 0; h < kHorizon; ++h) {
    int cells = 0;
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        const double expected = kTraj * occ[s] * table(s, a);
        if (expected == 0.0) {
          impossible_seen |= counts[h](s, a) != 0.0;
          continue;
        }
        chi2 += (counts[h](s, a) - expected) * (counts[h](s, a) - expected) / expected;
        ++cells;
      }
    }
    dof += cells - 1;
    Vec next = Vec::Zero(ns);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        for (int t = 0; t < ns; ++t) next[t] += occ[s] * table(s, a) * mdp.transition(s, a, t);
      }
    }
    occ = next;
  }
  const double limit = dof + 4.0 * std::sqrt(2.0 * dof);
  return result(chi2 <= limit && !impossible_seen,
                "chi2 <= dof + 4 sqrt(2 dof) = " + num(limit) + " (dof " + std::to_string(dof) + ")",
                "chi2 " + num(chi2));
}

CheckResult check_sampling_determinism() {
  const TabularMdp mdp = random_mdp(5, 3, 3);
  const TabularSoftmaxPolicy policy(5, 3);
  const PointMassEnv pm;
  const TruncatedLinearGaussianPolicy gauss(FeatureMap::for_env(pm), 0.5);
  bool same = true;
  for (int rep = 0; rep < 20; ++rep) {
    Rng a = make_stream(rep, Stream::kTrajectory);
    Rng b = make_stream(rep, Stream::kTrajectory);
    const auto t1 = sample_trajectory(mdp, policy, 30, a);
    const auto t2 = sample_trajectory(mdp, policy, 30, b);
    same &= t1.states == t2.states && t1.actions == t2.actions && t1.rewards == t2.rewards;
    const auto g1 = sample_trajectory(pm, gauss, 30, a);
    const auto g2 = sample_trajectory(pm, gauss, 30, b);
    same &= g1.states == g2.states && g1.actions == g2.actions && g1.rewards == g2.rewards;
  }
  return result(same, "identical trajectories for identical seeds", same ? "identical" : "differ");
}

// ------------------------------------------------------------------ policy

CheckResult check_score_zero_mean() {
  Rng rng = stream("zero_mean");
  const TabularSoftmaxPolicy soft(4, 3, random_normal(12, rng));
  const PointMassEnv pm;
  const TruncatedLinearGaussianPolicy gauss(FeatureMap::for_env(pm), 0.4, 3.0, random_normal(2, rng));
  MeanAccumulator acc_soft(soft.dim());
  MeanAccumulator acc_gauss(gauss.dim());
  for (int i = 0; i < 100'000; ++i) {
    acc_soft.add(soft.score(2, soft.sample_action(2, rng)));
    acc_gauss.add(gauss.score(0.7, gauss.sample_action(0.7, rng)));
  }
  const double z = std::max(max_z(acc_soft.mean(), acc_soft.standard_error(), Vec::Zero(soft.dim())),
                            max_z(acc_gauss.mean(), acc_gauss.standard_error(), Vec::Zero(gauss.dim())));
  return result(z <= 4.0, "|mean score| <= 4 SE per coordinate (1e5 actions)", "max z " + num(z));
}

template <class P>
double finite_difference_error(const P& policy, const typename P::State& s,
                               const typename P::Action& a, const Vec& x) {
  constexpr double eps = 1e-5;
  const Vec theta = policy.params();
  const Index d = policy.dim();
  Vec fd_score(d);
  for (Index i = 0; i < d; ++i) {
    Vec plus = theta, minus = theta;
    plus[i] += eps;
    minus[i] -= eps;
    fd_score[i] = (policy.with_params(plus).log_prob(s, a) - policy.with_params(minus).log_prob(s, a)) / (2 * eps);
  }
  const Vec score = policy.score(s, a);
  const Vec fd_hvp = (policy.with_params(theta + eps * x).score(s, a) -
                      policy.with_params(theta - eps * x).score(s, a)) / (2 * eps);
  const Vec hvp = policy.log_density_hvp(s, a, x);
  return std::max((fd_score - score).norm() / std::max(1.0, score.norm()),
                  (fd_hvp - hvp).norm() / std::max(1.0, hvp.norm()));
}

CheckResult check_finite_differences() {
  Rng rng = stream("finite_differences");
  double worst = 0.0;
  const PointMassEnv pm;
  for (int i = 0; i < 100; ++i) {
    const TabularSoftmaxPolicy soft(3, 4, random_normal(12, rng));
    const int s = static_cast<int>(uniform01(rng) * 3);
    const int a = static_cast<int>(uniform01(rng) * 4);
    worst = std::max(worst, finite_difference_error(soft, s, a, random_normal(12, rng)));

    const TruncatedLinearGaussianPolicy gauss(FeatureMap::for_env(pm), 0.3 + uniform01(rng), 3.0,
                                              random_normal(2, rng));
    const double st = 4.0 * uniform01(rng) - 2.0;
    const double z = 5.8 * uniform01(rng) - 2.9;  // stay inside the window under perturbation
    worst = std::max(worst, finite_difference_error(gauss, st, gauss.mean(st) + gauss.sigma() * z,
                                                    random_normal(2, rng)));
  }
  return result(worst <= 1e-5, "relative error <= 1e-5 (score and HVP, 100 draws each)",
                "max " + num(worst));
}

CheckResult check_gaussian_normalization() {
  const PointMassEnv pm;
  double worst = 0.0;
  for (double sigma : {0.1, 0.5, 2.0}) {
    for (double c : {1.0, 3.0, 5.0}) {
      const TruncatedLinearGaussianPolicy p(FeatureMap::for_env(pm), sigma, c, Vec::Constant(2, 0.3));
      const double s = 0.4;
      const double lo = p.mean(s) - c * sigma;
      const double width = 2.0 * c * sigma;
      constexpr int n = 4000;  // Simpson, even number of panels
      double total = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        // Endpoints pulled in by a few ulps so rounding cannot leave the window.
        const double frac = std::clamp(static_cast<double>(i) / n, 1e-14, 1.0 - 1e-14);
        total += w * std::exp(p.log_prob(s, lo + width * frac));
      }
      total *= width / n / 3.0;
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return result(worst <= 1e-8, "|integral of density - 1| <= 1e-8", "max " + num(worst));
}

CheckResult check_measured_bounds() {
  Rng rng = stream("measured_bounds");
  const TabularMdp mdp = chain(5);
  const TabularSoftmaxPolicy soft = random_softmax(mdp, rng, 2.0);
  std::vector<std::pair<int, int>> soft_samples;
  for (int i = 0; i < 2000; ++i) soft_samples.push_back(sample_state_action(mdp, soft, rng));
  const MeasuredBounds sb = measured_bounds(soft, soft_samples);

  const PointMassEnv pm;
  const TruncatedLinearGaussianPolicy gauss(FeatureMap::for_env(pm), 0.5, 3.0, Vec::Constant(2, -0.2));
  std::vector<std::pair<double, double>> gauss_samples;
  for (int i = 0; i < 2000; ++i) gauss_samples.push_back(sample_state_action(pm, gauss, rng));
  const MeasuredBounds gb = measured_bounds(gauss, gauss_samples);

  const TabularSoftmaxPolicy single(1, 3, random_normal(3, rng));
  const TabularMdp one = bandit({0.1, 0.2, 0.3});
  std::vector<std::pair<int, int>> single_samples;
  for (int i = 0; i < 500; ++i) single_samples.push_back(sample_state_action(one, single, rng));
  const MeasuredBounds ob = measured_bounds(single, single_samples);

  const bool pass = sb.mg_hat <= soft.declared_mg() && sb.mh_hat <= soft.declared_mh() + 1e-12 &&
                    gb.mg_hat <= gauss.declared_mg() && gb.mh_hat <= gauss.declared_mh() * (1 + 1e-12) &&
                    gb.mu_f_hat > 0.0 && std::abs(ob.mu_f_hat) <= 1e-12;
  return result(pass,
                "measured M_g, M_h <= declared; Gaussian mu_F > 0; single-state softmax FIM singular",
                "softmax M_g " + num(sb.mg_hat) + "/" + num(soft.declared_mg()) + ", Gaussian M_g " +
                    num(gb.mg_hat) + "/" + num(gauss.declared_mg()) + ", Gaussian mu_F " +
                    num(gb.mu_f_hat) + ", single-state mu_F " + num(ob.mu_f_hat));
}

// -------------------------------------------------------------- estimators

struct EstimatorProblem {
  TabularMdp mdp = random_mdp(5, 3, 7, 0.9);
  int horizon = 50;
};

CheckResult check_gradient_unbiased() {
  const EstimatorProblem prob;
  Rng rng = stream("c1.theta");
  const TabularSoftmaxPolicy policy = random_softmax(prob.mdp, rng);
  const Vec exact = exact_truncated_gradient(prob.mdp, policy, prob.horizon);
  MeanAccumulator acc(policy.dim());
  Rng sample_rng = stream("c1.samples");
  for (int i = 0; i < 100'000; ++i) {
    acc.add(truncated_grad(sample_trajectory(prob.mdp, policy, prob.horizon, sample_rng), policy,
                           prob.mdp.gamma()));
  }
  const double z = max_z(acc.mean(), acc.standard_error(), exact);
  return result(z <= 4.0, "|MC mean - exact grad J^H| <= 4 SE per coordinate (1e5 trajectories)",
                "max z " + num(z));
}

CheckResult check_hessian_identity() {
  const EstimatorProblem prob;
  Rng rng = stream("c2.theta");
  const Vec theta_prev = random_normal(15, rng);
  const Vec delta = random_normal(15, rng).normalized() * 0.1;
  const Vec theta = theta_prev + delta;
  const TabularSoftmaxPolicy proto(5, 3);
  const Vec exact = exact_truncated_gradient(prob.mdp, proto.with_params(theta), prob.horizon) -
                    exact_truncated_gradient(prob.mdp, proto.with_params(theta_prev), prob.horizon);
  MeanAccumulator acc(15);
  Rng q_rng = stream("c2.q");
  Rng sample_rng = stream("c2.samples");
  for (int i = 0; i < 100'000; ++i) {
    const double q = uniform01(q_rng);
    const TabularSoftmaxPolicy hat = proto.with_params(q * theta + (1.0 - q) * theta_prev);
    const auto traj = sample_trajectory(prob.mdp, hat, prob.horizon, sample_rng);
    acc.add(hessian_vector_product(traj, hat, prob.mdp.gamma(), delta));
  }
  const double z = max_z(acc.mean(), acc.standard_error(), exact);
  return result(z <= 4.0,
                "|MC mean of H(tau_hat; theta_hat) dtheta - exact gradient difference| <= 4 SE (1e5 draws)",
                "max z " + num(z));
}

CheckResult check_variance_bounds() {
  const EstimatorProblem prob;
  const double gamma = prob.mdp.gamma();
  Rng rng = stream("c4");
  const TabularSoftmaxPolicy proto(5, 3);
  const ConstantsBundle c = compute_constants(proto.declared_mg(), proto.declared_mh(), 0.0, gamma, prob.horizon);
  double worst_g = 0.0;
  double worst_h = 0.0;
  for (int k = 0; k < 20; ++k) {
    const TabularSoftmaxPolicy policy = proto.with_params(random_normal(15, rng));
    const Vec x = random_normal(15, rng);
    double sum_g = 0.0;
    double sum_h = 0.0;
    constexpr int n = 10'000;
    for (int i = 0; i < n; ++i) {
      const auto traj = sample_trajectory(prob.mdp, policy, prob.horizon, rng);
      sum_g += truncated_grad(traj, policy, gamma).squaredNorm();
      sum_h += hessian_vector_product(traj, policy, gamma, x).squaredNorm() / x.squaredNorm();
    }
    worst_g = std::max(worst_g, sum_g / n);
    worst_h = std::max(worst_h, sum_h / n);
  }
  const bool pass = worst_g <= c.grad_variance && worst_h <= c.hessian_variance;
  return result(pass,
                "E||g||^2 <= nu_g^2 = " + num(c.grad_variance) + ", E||Hx||^2/||x||^2 <= nu_h^2 = " +
                    num(c.hessian_variance),
                "max E||g||^2 " + num(worst_g) + ", max E||Hx||^2/||x||^2 " + num(worst_h));
}

CheckResult check_hvp_finite_difference() {
  const TabularMdp mdp = random_mdp(3, 2, 19, 0.8);
  constexpr int kHorizon = 15;
  constexpr double eps = 1e-4;
  const double gamma = mdp.gamma();
  Rng rng = stream("hvp_fd.theta");
  const TabularSoftmaxPolicy policy = random_softmax(mdp, rng);
  const Vec x = random_normal(6, rng).normalized();
  const TabularSoftmaxPolicy plus = policy.with_params(policy.params() + eps * x);
  const TabularSoftmaxPolicy minus = policy.with_params(policy.params() - eps * x);
  const Vec exact = (exact_truncated_gradient(mdp, plus, kHorizon) -
                     exact_truncated_gradient(mdp, minus, kHorizon)) / (2 * eps);
  MeanAccumulator hvp(6);
  MeanAccumulator paired(6);
  Rng sample_rng = stream("hvp_fd.samples");
  for (int i = 0; i < 100'000; ++i) {
    hvp.add(hessian_vector_product(sample_trajectory(mdp, policy, kHorizon, sample_rng), policy, gamma, x));
    // Common random numbers: both perturbed rollouts replay the same stream.
    Rng a = sample_rng;
    Rng b = sample_rng;
    const auto tp = sample_trajectory(mdp, plus, kHorizon, a);
    const auto tm = sample_trajectory(mdp, minus, kHorizon, b);
    sample_rng = a;
    paired.add((truncated_grad(tp, plus, gamma) - truncated_grad(tm, minus, gamma)) / (2 * eps));
  }
  const Vec diff_se = (hvp.standard_error().array().square() + paired.standard_error().array().square()).sqrt();
  const double z = std::max({max_z(hvp.mean(), hvp.standard_error(), exact),
                             max_z(paired.mean(), paired.standard_error(), exact),
                             max_z(hvp.mean(), diff_se, paired.mean())});
  return result(z <= 4.0,
                "MC mean of H(tau; theta) x, paired finite differences (eps 1e-4) and exact agree within 4 SE",
                "max z " + num(z));
}

CheckResult check_importance_difference() {
  const TabularMdp mdp = random_mdp(3, 2, 5, 0.9);
  constexpr int kHorizon = 10;
  Rng rng = stream("is_difference");
  const Vec theta_prev = random_normal(6, rng);
  const Vec theta = theta_prev + random_normal(6, rng).normalized() * 0.1;
  const TabularSoftmaxPolicy old_p(3, 2, theta_prev);
  const TabularSoftmaxPolicy new_p(3, 2, theta);
  const Vec exact = exact_truncated_gradient(mdp, new_p, kHorizon) -
                    exact_truncated_gradient(mdp, old_p, kHorizon);
  MeanAccumulator acc(6);
  for (int i = 0; i < 100'000; ++i) {
    const auto traj = sample_trajectory(mdp, new_p, kHorizon, rng);
    const double w = importance_weight(traj, old_p, new_p);
    acc.add(truncated_grad(traj, new_p, mdp.gamma()) - w * truncated_grad(traj, old_p, mdp.gamma()));
  }
  const double z = max_z(acc.mean(), acc.standard_error(), exact);
  return result(z <= 4.0, "E[g(tau; new) - w g(tau; old)] matches the exact difference within 4 SE",
                "max z " + num(z));
}

CheckResult check_baseline_unbiased() {
  const TabularMdp mdp = random_mdp(4, 2, 13, 0.8);
  constexpr int kHorizon = 20;
  Rng rng = stream("baseline");
  const TabularSoftmaxPolicy policy = random_softmax(mdp, rng);
  const Vec v = exact_value(mdp, policy).v;
  const Vec exact = exact_truncated_gradient(mdp, policy, kHorizon);
  const std::function<double(const int&)> baseline = [&v](const int& s) { return v[s]; };
  MeanAccumulator literal(policy.dim());
  MeanAccumulator per_step(policy.dim());
  for (int i = 0; i < 100'000; ++i) {
    const auto traj = sample_trajectory(mdp, policy, kHorizon, rng);
    literal.add(baseline_grad(traj, policy, mdp.gamma(), baseline, BaselineForm::kLiteral));
    per_step.add(baseline_grad(traj, policy, mdp.gamma(), baseline, BaselineForm::kPerStep));
  }
  const double z = std::max(max_z(literal.mean(), literal.standard_error(), exact),
                            max_z(per_step.mean(), per_step.standard_error(), exact));
  return result(z <= 4.0, "baseline estimators (literal and per-step, b = V) unbiased within 4 SE",
                "max z " + num(z));
}

CheckResult check_bias_telescoping() {
  const TabularMdp mdp = random_mdp(3, 2, 17, 0.8);
  constexpr int kHorizon = 15;
  const double gamma = mdp.gamma();
  Rng rng = stream("telescoping");
  const TabularSoftmaxPolicy proto(3, 2);
  std::vector<Vec> thetas{random_normal(6, rng)};
  for (int k = 0; k < 2; ++k) thetas.push_back(thetas.back() + random_normal(6, rng) * 0.2);
  const Vec grad1 = exact_truncated_gradient(mdp, proto.with_params(thetas[0]), kHorizon);
  const Vec grad3 = exact_truncated_gradient(mdp, proto.with_params(thetas[2]), kHorizon);
  const double beta2 = 20.0 / 22.0;
  const double beta3 = 20.0 / 23.0;
  const double factor = (1.0 - beta2) * (1.0 - beta3);
  MeanAccumulator acc(6);
  for (int rep = 0; rep < 10'000; ++rep) {
    const TabularSoftmaxPolicy p1 = proto.with_params(thetas[0]);
    MomentumState state = initial_momentum(
        truncated_grad(sample_trajectory(mdp, p1, kHorizon, rng), p1, gamma), thetas[0]);
    const Vec u1_error = state.u - grad1;
    for (int k = 1; k < 3; ++k) {
      const double beta = k == 1 ? beta2 : beta3;
      const double q = uniform01(rng);
      const Vec theta_hat = q * thetas[k] + (1.0 - q) * thetas[k - 1];
      const auto traj = sample_trajectory(mdp, proto.with_params(thetas[k]), kHorizon, rng);
      const auto traj_hat = sample_trajectory(mdp, proto.with_params(theta_hat), kHorizon, rng);
      state = momentum_update_hessian(state, thetas[k], traj, traj_hat, theta_hat, beta, proto, gamma);
    }
    acc.add((state.u - grad3) - factor * u1_error);
  }
  const double z = max_z(acc.mean(), acc.standard_error(), Vec::Zero(6));
  return result(z <= 4.0, "E[u_3 - grad_3] = (1-b_2)(1-b_3) E[u_1 - grad_1] within 4 SE (1e4 replays)",
                "max z " + num(z));
}

CheckResult check_estimator_determinism() {
  const TabularMdp mdp = random_mdp(4, 3, 2);
  const TabularSoftmaxPolicy policy(4, 3);
  RunConfig cfg;
  cfg.T = 40;
  cfg.seed = 9;
  cfg.subproblem.kind = SubproblemKind::kExact;
  auto collect = [&](Algorithm alg) {
    std::vector<Vec> us;
    RunHooks<TabularSoftmaxPolicy> hooks = default_hooks<TabularMdp, TabularSoftmaxPolicy>(mdp, cfg);
    hooks.observer = [&us](const IterationTrace<TabularSoftmaxPolicy>& tr) { us.push_back(*tr.u); };
    run_algorithm(alg, mdp, policy, cfg, hooks);
    return us;
  };
  bool same = true;
  for (Algorithm alg : all_algorithms()) {
    const auto a = collect(alg);
    const auto b = collect(alg);
    same &= a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same &= bitwise_equal(a[i], b[i]);
  }
  return result(same, "identical seeds give bit-identical u_t sequences", same ? "identical" : "differ");
}

// -------------------------------------------------------- natural_gradient

/// Scores x = sqrt(d) xi A e_i with i uniform and xi = +-1, so F = A A^T.
struct SyntheticScores {
  Mat a;

  Vec draw(Rng& rng) const {
    const Index d = a.cols();
    const auto i = static_cast<Index>(uniform01(rng) * static_cast<double>(d));
    const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    return std::sqrt(static_cast<double>(d)) * sign * a.col(i);
  }
  Mat fim() const { return a * a.transpose(); }
  double mg() const { return static_cast<double>(a.cols()) * a.colwise().squaredNorm().maxCoeff(); }
};

CheckResult check_subproblem_rate() {
  constexpr int d = 4;
  const SyntheticScores scores{Mat::Identity(d, d)};
  const double mg = scores.mg();
  const double mu_f = 1.0;
  const Vec u = (Vec(d) << 1.0, -2.0, 0.5, 1.5).finished();
  const Vec w_hat = exact_npg_direction(scores.fim(), u, 0.0);
  const double eta = 1.0 / (4.0 * mg);
  const ScoreSampler sampler = [&scores](Rng& r) { return scores.draw(r); };
  Rng rng = stream("c5");
  auto error = [&](int k) {
    double total = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      total += (npg_sgd(sampler, u, k, eta, Vec::Zero(d), rng) - w_hat).squaredNorm();
    }
    return total / 100.0;
  };
  const double root = std::sqrt(2.0 * d) + 1.0;
  bool pass = true;
  std::ostringstream measured;
  for (int k : {100, 1000, 10000}) {
    const double bound = 4.0 * mg * root * root / (k * std::pow(mu_f, 3)) * u.squaredNorm();
    const double e = error(k);
    const double ratio = e / error(8 * k);
    pass &= e <= bound && ratio >= 4.0 && ratio <= 16.0;
    measured << "K=" << k << ": err " << num(e) << " (bound " << num(bound) << "), ratio " << num(ratio)
             << "; ";
  }
  std::string m = measured.str();
  m.resize(m.size() - 2);
  return result(pass, "E||w_o - w_hat||^2 <= 4 M_g (sqrt(2d)+1)^2 ||u||^2 / (K mu_F^3); err(K)/err(8K) in [4,16]",
                m);
}

CheckResult check_exact_optimality() {
  Rng rng = stream("exact_optimality");
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Mat m = random_normal(36, rng).reshaped(6, 6);
    const Mat f = m * m.transpose() + 0.1 * Mat::Identity(6, 6);
    const Vec u = random_normal(6, rng);
    worst = std::max(worst, (f * exact_npg_direction(f, u, 0.0) - u).norm() / u.norm());
  }
  return result(worst <= 1e-8, "||F w - u|| <= 1e-8 ||u|| for nonsingular F", "max " + num(worst));
}

CheckResult check_sgd_convergence() {
  constexpr int d = 6;
  Rng rng = stream("sgd_convergence");
  Mat a = Mat::Identity(d, d) + 0.15 * random_normal(d * d, rng).reshaped(d, d);
  const SyntheticScores scores{a};
  const Vec u = random_normal(d, rng);
  const Vec w_hat = exact_npg_direction(scores.fim(), u, 0.0);
  const ScoreSampler sampler = [&scores](Rng& r) { return scores.draw(r); };
  const Vec w = npg_sgd(sampler, u, 100'000, default_eta(scores.mg()), Vec::Zero(d), rng);
  const double rel = (w - w_hat).norm() / w_hat.norm();
  return result(rel < 1e-2, "relative error to F^{-1} u < 1e-2 at K = 1e5 (d = 6)", num(rel));
}

CheckResult check_scale_equivariance() {
  const SyntheticScores scores{Mat::Identity(4, 4) * 0.7};
  const ScoreSampler sampler = [&scores](Rng& r) { return scores.draw(r); };
  const Vec u = (Vec(4) << 0.3, -1.0, 2.0, 0.25).finished();
  Rng r1 = stream("equivariance");
  Rng r2 = stream("equivariance");
  const Vec w1 = npg_sgd(sampler, u, 500, 0.1, Vec::Zero(4), r1);
  const Vec w2 = npg_sgd(sampler, 2.0 * u, 500, 0.1, Vec::Zero(4), r2);
  const Mat f = scores.fim();
  const Vec e1 = exact_npg_direction(f, u, 1e-3);
  const Vec e2 = exact_npg_direction(f, 2.0 * u, 1e-3);
  const double err = std::max((w2 - 2.0 * w1).norm() / w1.norm(), (e2 - 2.0 * e1).norm() / e1.norm());
  return result(err <= 1e-12, "outputs for 2u equal twice those for u within 1e-12", num(err));
}

// -------------------------------------------------------------- algorithms

CheckResult check_chain_convergence() {
  const auto start = std::chrono::steady_clock::now();
  const TabularMdp mdp = chain(5);
  const TabularSoftmaxPolicy policy(5, 2);
  constexpr int kT = 2000;
  const long budget = trajectories_for(Algorithm::kNpgHm, kT);
  const int horizon = auto_horizon(mdp.gamma(), kT, 20);
  const double initial_gap = optimal_return(mdp) - exact_return(mdp, policy);
  const std::vector<double> grid = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};

  auto final_gap = [&](Algorithm alg, double alpha0, std::uint64_t seed) {
    RunConfig cfg;
    cfg.T = iterations_for_budget(alg, budget);
    cfg.alpha0 = alpha0;
    cfg.seed = seed;
    cfg.horizon = horizon;
    cfg.eval_interval = cfg.T;
    cfg.subproblem.kind = SubproblemKind::kExact;
    cfg.subproblem.damping = 1e-3;
    return *run_algorithm(alg, mdp, policy, cfg).records.back().gap;
  };
  // Step size per algorithm: smallest worst-case final gap over tuning seeds
  // 101..110, disjoint from the reported seeds 1..5.
  auto tune = [&](Algorithm alg) {
    double best_alpha = grid.front();
    double best_worst = std::numeric_limits<double>::infinity();
    for (double alpha0 : grid) {
      double worst = 0.0;
      for (std::uint64_t seed = 101; seed <= 110; ++seed) worst = std::max(worst, final_gap(alg, alpha0, seed));
      if (worst < best_worst) {
        best_worst = worst;
        best_alpha = alpha0;
      }
    }
    return best_alpha;
  };
  auto test_median = [&](Algorithm alg, double alpha0) {
    std::vector<double> gaps;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) gaps.push_back(final_gap(alg, alpha0, seed));
    return median(gaps);
  };
  const double npg_alpha = tune(Algorithm::kNpgHm);
  const double pg_alpha = tune(Algorithm::kVanillaPg);
  const double npg_gap = test_median(Algorithm::kNpgHm, npg_alpha);
  const double pg_gap = test_median(Algorithm::kVanillaPg, pg_alpha);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = npg_gap <= 0.1 * initial_gap && npg_gap <= pg_gap && seconds <= 300.0;
  return result(pass,
                "NPG-HM median gap <= 0.1 x initial (" + num(0.1 * initial_gap) +
                    ") and <= PG median gap at " + std::to_string(budget) + " trajectories; <= 300 s",
                "NPG-HM " + num(npg_gap) + " (alpha0 " + num(npg_alpha) + "), PG " + num(pg_gap) +
                    " (alpha0 " + num(pg_alpha) + "), " + num(seconds) + " s");
}

CheckResult check_schedule_bookkeeping() {
  std::vector<std::string> failures;
  for (int tau0 : {20, 37}) {
    for (double alpha0 : {0.05, 0.7}) {
      for (int t = 1; t <= 5000; ++t) {
        const Schedule s = schedule(t, tau0, alpha0, 0.9, 5000);
        if (std::abs(s.beta * (t + tau0) - tau0) > 1e-12 ||
            std::abs(s.alpha * s.alpha * (t + tau0) - alpha0 * alpha0 * tau0) > 1e-12) {
          failures.push_back("schedule identity at t=" + std::to_string(t));
          break;
        }
      }
    }
  }
  if (schedule(1, 20, 1.0, 0.9, 100).beta != 20.0 / 21.0) failures.push_back("beta_1");
  if (std::abs(schedule(380, 20, 0.3, 0.9, 100).alpha - 0.3 / std::sqrt(20.0)) > 1e-12) {
    failures.push_back("alpha_380");
  }
  if (schedule(1, 20, 1.0, 0.99, 980).horizon != 688) failures.push_back("H(0.99, 1000)");

  const TabularMdp mdp = chain(5);
  const TabularSoftmaxPolicy policy(5, 2);
  for (Algorithm alg : all_algorithms()) {
    RunConfig cfg;
    cfg.T = 60;
    cfg.subproblem.kind = SubproblemKind::kExact;
    const RunResult r = run_algorithm(alg, mdp, policy, cfg);
    const bool two = alg == Algorithm::kNpgHm || alg == Algorithm::kHarpg;
    for (const auto& rec : r.records) {
      const int t = std::min(rec.t, cfg.T - 1);
      const long expected = two ? 1 + 2L * (t - 1) : t;
      if (rec.trajectories != expected) {
        failures.push_back(to_string(alg) + " counter at t=" + std::to_string(rec.t));
        break;
      }
    }
    if (r.trajectories != trajectories_for(alg, cfg.T)) failures.push_back(to_string(alg) + " total");
  }

  for (const std::string env_name : {"chain5", "pointmass"}) {
    ExperimentSpec spec;
    spec.env = env_name;
    spec.algorithms = all_algorithms();
    spec.seeds = {1, 2};
    spec.run.T = env_name == "chain5" ? 150 : 40;
    spec.run.subproblem.iterations = 10;
    spec.run.alpha0 = 0.005;
    spec.alpha0_explicit = true;
    const AnyEnv env = make_env(spec.env);
    const AnyPolicy pol = make_policy(env, spec.policy);
    spec.threads = 1;
    const auto a = run_experiment(spec, env, pol, false);
    const auto b = run_experiment(spec, env, pol, false);
    spec.threads = 3;
    const auto c = run_experiment(spec, env, pol, false);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
      const auto csv = [](const CellResult& cell) {
        return format_csv(metrics_rows(cell.algorithm, cell.seed, cell.run));
      };
      if (csv(a.cells[i]) != csv(b.cells[i]) || csv(a.cells[i]) != csv(c.cells[i])) {
        failures.push_back(env_name + " rerun differs");
        break;
      }
    }
    if (a.summary.dump() != c.summary.dump()) failures.push_back(env_name + " summary differs");
  }
  std::string measured = failures.empty() ? "all exact" : "";
  for (const auto& f : failures) measured += (measured.empty() ? "" : "; ") + f;
  return result(failures.empty(),
                "schedule identities to 1e-12, trajectory counters exact, byte-identical reruns",
                measured);
}

template <class Env, class P>
bool fresh_estimate_collapse(const Env& env, const P& policy, Algorithm alg, SubproblemKind kind) {
  RunConfig cfg;
  cfg.T = 30;
  cfg.momentum_beta = 1.0;
  cfg.horizon = 20;
  cfg.subproblem.kind = kind;
  cfg.subproblem.iterations = 10;
  cfg.alpha0 = 0.05;
  RunHooks<P> hooks = default_hooks<Env, P>(env, cfg);
  bool same = true;
  int seen = 0;
  hooks.observer = [&](const IterationTrace<P>& tr) {
    ++seen;
    same &= bitwise_equal(*tr.u, truncated_grad(*tr.traj, policy.with_params(*tr.theta), env.gamma()));
  };
  run_algorithm(alg, env, policy, cfg, hooks);
  return same && seen == cfg.T - 1;
}

template <class Env, class P>
bool zero_reward_fixed(const Env& env, const P& policy, SubproblemKind kind) {
  bool fixed = true;
  for (Algorithm alg : all_algorithms()) {
    RunConfig cfg;
    cfg.T = 25;
    cfg.horizon = 15;
    cfg.subproblem.kind = kind;
    cfg.subproblem.iterations = 10;
    cfg.alpha0 = 0.5;
    fixed &= bitwise_equal(run_algorithm(alg, env, policy, cfg).theta, policy.params());
  }
  return fixed;
}

CheckResult check_degenerate_collapses() {
  Rng rng = stream("c10");
  const TabularMdp mdp = random_mdp(5, 3, 7);
  const TabularSoftmaxPolicy soft = random_softmax(mdp, rng);
  const PointMassEnv pm;
  const TruncatedLinearGaussianPolicy gauss(FeatureMap::for_env(pm), 0.5, 3.0, random_normal(2, rng, 0.3));
  std::vector<std::string> failures;
  for (Algorithm alg : {Algorithm::kNpgHm, Algorithm::kMnpg, Algorithm::kHarpg}) {
    if (!fresh_estimate_collapse(mdp, soft, alg, SubproblemKind::kExact)) failures.push_back(to_string(alg) + " tabular");
    if (!fresh_estimate_collapse(pm, gauss, alg, SubproblemKind::kSgdAverage)) failures.push_back(to_string(alg) + " point mass");
  }
  if (!zero_reward_fixed(chain(5).with_scaled_rewards(0.0), TabularSoftmaxPolicy(5, 2, random_normal(10, rng)),
                         SubproblemKind::kExact)) {
    failures.push_back("zero-reward chain");
  }
  PointMassParams zero;
  zero.q_s = 0.0;
  zero.q_a = 0.0;
  if (!zero_reward_fixed(PointMassEnv(zero), gauss, SubproblemKind::kSgdAverage)) failures.push_back("zero-reward point mass");
  if (!zero_reward_fixed(PointMassEnv(zero), gauss, SubproblemKind::kAdam)) failures.push_back("zero-reward point mass (adam)");
  std::string measured = failures.empty() ? "all collapse exactly" : "failed:";
  for (const auto& f : failures) measured += " " + f;
  return result(failures.empty(),
                "beta = 1 gives u_t = g(tau_t; theta_t) bitwise; zero rewards leave theta fixed (all algorithms)",
                measured);
}

CheckResult check_monotone_trend() {
  std::ostringstream measured;
  bool pass = true;
  for (const auto& [name, mdp] : std::vector<Testbed>{{"bandit", bandit({1.0, 0.0, 0.5})}, {"chain5", chain(5)}}) {
    const TabularSoftmaxPolicy policy(mdp.n_states(), mdp.n_actions());
    std::vector<double> slopes;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RunConfig cfg;
      cfg.T = 400;
      cfg.seed = seed;
      cfg.eval_interval = 1;
      cfg.alpha0 = default_alpha0(Algorithm::kNpgHm);
      cfg.subproblem.kind = SubproblemKind::kExact;
      const RunResult r = run_npg_hm(mdp, policy, cfg, default_hooks<TabularMdp, TabularSoftmaxPolicy>(mdp, cfg));
      std::vector<double> ts, js;
      for (const auto& rec : r.records) {
        if (rec.t >= cfg.T / 2 && rec.j_hat) {
          ts.push_back(rec.t);
          js.push_back(*rec.j_hat);
        }
      }
      const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
      const double jm = std::accumulate(js.begin(), js.end(), 0.0) / js.size();
      double num_s = 0.0, den = 0.0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        num_s += (ts[i] - tm) * (js[i] - jm);
        den += (ts[i] - tm) * (ts[i] - tm);
      }
      slopes.push_back(num_s / den);
    }
    const double m = median(slopes);
    pass &= m > 0.0;
    measured << name << " median slope " << num(m) << "; ";
  }
  std::string m = measured.str();
  m.resize(m.size() - 2);
  return result(pass, "median best-fit slope of exact J over the last half > 0", m);
}

// ----------------------------------------------------------------- oracles

CheckResult check_truncation_bias() {
  Rng rng = stream("c3");
  double worst_fraction = 0.0;
  double worst_ratio = 0.0;
  for (const auto& bed : tabular_testbeds()) {
    for (int rep = 0; rep < 5; ++rep) {
      const TabularSoftmaxPolicy policy = random_softmax(bed.mdp, rng);
      const Vec full = exact_policy_gradient(bed.mdp, policy);
      for (int h : {5, 10, 20, 50}) {
        const double bias = (exact_truncated_gradient(bed.mdp, policy, h) - full).norm();
        const double gh = std::pow(bed.mdp.gamma(), h);
        const ConstantsBundle c =
            compute_constants(policy.declared_mg(), policy.declared_mh(), 0.0, bed.mdp.gamma(), h);
        worst_fraction = std::max(worst_fraction, bias / (c.grad_truncation * gh));
        worst_ratio = std::max(worst_ratio, bias / gh);
      }
    }
  }
  return result(worst_fraction <= 1.0, "||grad J^H - grad J|| <= G_g gamma^H, H in {5,10,20,50}",
                "max bias/(G_g gamma^H) " + num(worst_fraction) + ", max bias/gamma^H " + num(worst_ratio));
}

CheckResult check_performance_difference() {
  Rng rng = stream("c6");
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int ns = 2 + static_cast<int>(uniform01(rng) * 5);
    const int na = 2 + static_cast<int>(uniform01(rng) * 3);
    const double gamma = 0.5 + 0.45 * uniform01(rng);
    const TabularMdp mdp = random_mdp(ns, na, rng(), gamma);
    const Mat pi = random_table(ns, na, rng);
    const Mat pi_prime = random_table(ns, na, rng);
    const double lhs = exact_return(mdp, pi_prime) - exact_return(mdp, pi);
    worst = std::max(worst, std::abs(performance_difference(mdp, pi_prime, pi) - lhs));
  }
  return result(worst <= 1e-8, "|RHS - (J(pi') - J(pi))| <= 1e-8 on 100 random triples", "max " + num(worst));
}

CheckResult check_gradient_dominance() {
  const TabularMdp mdp = chain(5);
  const double gamma = mdp.gamma();
  const double j_star = optimal_return(mdp);
  Rng rng = stream("c7");
  const TabularSoftmaxPolicy proto(5, 2);
  const double mg = proto.declared_mg();
  double min_slack = std::numeric_limits<double>::infinity();
  double max_bias = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const TabularSoftmaxPolicy policy = proto.with_params(random_normal(10, rng, 1.5));
    const Vec grad = exact_policy_gradient(mdp, policy);
    const Vec w = exact_npg_direction(exact_fim(mdp, policy), grad, 0.0);
    const double eps_bias = approximation_bias(mdp, policy, w);
    const double gap = j_star - exact_return(mdp, policy);
    const double rhs = gap * gap / (2.0 * mg) - eps_bias / (mg * (1.0 - gamma) * (1.0 - gamma));
    min_slack = std::min(min_slack, w.squaredNorm() - rhs);
    max_bias = std::max(max_bias, eps_bias);
  }
  return result(min_slack >= 0.0,
                "||w*||^2 >= (J*-J)^2/(2 M_g) - eps_bias/(M_g (1-gamma)^2) at 200 random theta",
                "min slack " + num(min_slack) + ", max eps_bias " + num(max_bias));
}

CheckResult check_smoothness_and_norm() {
  Rng rng = stream("smoothness");
  double worst_l = 0.0;
  double worst_norm = 0.0;
  for (const auto& bed : tabular_testbeds()) {
    const TabularSoftmaxPolicy proto(bed.mdp.n_states(), bed.mdp.n_actions());
    const ConstantsBundle c = compute_constants(proto.declared_mg(), proto.declared_mh(), 0.0, bed.mdp.gamma(), 1);
    for (int rep = 0; rep < 200; ++rep) {
      const Vec t1 = random_normal(proto.dim(), rng, 2.0);
      const Vec t2 = uniform01(rng) < 0.5 ? Vec(t1 + random_normal(proto.dim(), rng, 0.05))
                                          : random_normal(proto.dim(), rng, 2.0);
      const Vec g1 = exact_policy_gradient(bed.mdp, proto.with_params(t1));
      const Vec g2 = exact_policy_gradient(bed.mdp, proto.with_params(t2));
      worst_l = std::max(worst_l, (g1 - g2).norm() / (c.smoothness * (t1 - t2).norm()));
      worst_norm = std::max(worst_norm, g1.norm() / c.grad_norm_bound);
    }
  }
  return result(worst_l <= 1.0 && worst_norm <= 1.0,
                "||grad J(t1) - grad J(t2)|| <= L ||t1 - t2||; ||grad J|| <= sqrt(M_g)/(1-gamma)^1.5",
                "max ratio to L " + num(worst_l) + ", max ratio to norm bound " + num(worst_norm));
}

CheckResult check_oracle_invariants() {
  Rng rng = stream("oracle_invariants");
  double worst = 0.0;
  for (const auto& bed : tabular_testbeds()) {
    const TabularSoftmaxPolicy policy = random_softmax(bed.mdp, rng);
    const ExactMdpQuantities q = compute_exact(bed.mdp, policy);
    const Mat table = policy.probability_table();
    worst = std::max(worst, std::abs(q.visitation.sum() - 1.0));
    worst = std::max(worst, (table.cwiseProduct(q.advantage)).rowwise().sum().cwiseAbs().maxCoeff());
    worst = std::max(worst, (exact_policy_gradient_advantage(bed.mdp, policy) - q.grad_j).cwiseAbs().maxCoeff());
    // Bellman residual of V.
    Vec residual = q.v;
    for (int s = 0; s < bed.mdp.n_states(); ++s) {
      residual[s] -= table.row(s).dot(q.q.row(s));
    }
    worst = std::max(worst, residual.cwiseAbs().maxCoeff());
  }
  const PointMassEnv pm;
  const double lqr = solve_lqr(pm).residual;
  return result(worst <= 1e-10 && lqr <= 1e-10,
                "sum d = 1, sum_a pi A = 0, Q-form = A-form, Bellman residual: all <= 1e-10; Riccati residual <= 1e-10",
                "max deviation " + num(worst) + ", Riccati residual " + num(lqr));
}

// ----------------------------------------------------------------- harness

CheckResult check_serialization() {
  Rng rng = stream("serialization");
  bool ok = true;
  const TabularSoftmaxPolicy soft(3, 4, random_normal(12, rng, 1e3));
  const AnyPolicy back = parse_policy(serialize_policy(soft));
  ok &= bitwise_equal(std::get<TabularSoftmaxPolicy>(back).params(), soft.params());
  const PointMassEnv pm;
  const TruncatedLinearGaussianPolicy gauss(FeatureMap::for_env(pm), 0.1 + uniform01(rng), 3.0,
                                            random_normal(2, rng));
  const AnyPolicy gauss_back = parse_policy(serialize_policy(gauss));
  const auto& gb = std::get<TruncatedLinearGaussianPolicy>(gauss_back);
  ok &= bitwise_equal(gb.params(), gauss.params()) && gb.sigma() == gauss.sigma();

  const TabularMdp mdp = random_mdp(3, 2, 5);
  RunConfig cfg;
  cfg.T = 30;
  cfg.subproblem.kind = SubproblemKind::kExact;
  const auto rows = metrics_rows(Algorithm::kNpgHm, 3, run_algorithm(Algorithm::kNpgHm, mdp, TabularSoftmaxPolicy(3, 2), cfg));
  const std::string csv = format_csv(rows);
  ok &= format_csv(parse_csv(csv)) == csv;
  return result(ok, "policy files and CSVs round-trip bit-exactly", ok ? "exact" : "mismatch");
}

std::vector<Check> build_checks() {
  std::vector<Check> c;
  auto add = [&c](std::string name, std::string module, int criterion, CheckResult (*fn)()) {
    c.push_back(Check{std::move(name), std::move(module), criterion, fn});
  };
  add("visitation_tv", "env_core", 0, check_visitation_tv);
  add("step_marginals", "env_core", 0, check_step_marginals);
  add("sampling_determinism", "env_core", 0, check_sampling_determinism);
  add("score_zero_mean", "policy", 0, check_score_zero_mean);
  add("finite_differences", "policy", 0, check_finite_differences);
  add("gaussian_normalization", "policy", 0, check_gaussian_normalization);
  add("measured_bounds", "policy", 0, check_measured_bounds);
  add("gradient_unbiased", "estimators", 1, check_gradient_unbiased);
  add("hessian_integral_identity", "estimators", 2, check_hessian_identity);
  add("variance_bounds", "estimators", 4, check_variance_bounds);
  add("hvp_finite_difference", "estimators", 0, check_hvp_finite_difference);
  add("importance_difference", "estimators", 0, check_importance_difference);
  add("baseline_unbiased", "estimators", 0, check_baseline_unbiased);
  add("bias_telescoping", "estimators", 0, check_bias_telescoping);
  add("estimator_determinism", "estimators", 0, check_estimator_determinism);
  add("subproblem_rate", "natural_gradient", 5, check_subproblem_rate);
  add("exact_optimality", "natural_gradient", 0, check_exact_optimality);
  add("sgd_convergence", "natural_gradient", 0, check_sgd_convergence);
  add("scale_equivariance", "natural_gradient", 0, check_scale_equivariance);
  add("truncation_bias", "oracles", 3, check_truncation_bias);
  add("performance_difference", "oracles", 6, check_performance_difference);
  add("gradient_dominance", "oracles", 7, check_gradient_dominance);
  add("smoothness_and_norm", "oracles", 0, check_smoothness_and_norm);
  add("oracle_invariants", "oracles", 0, check_oracle_invariants);
  add("chain_convergence", "algorithms", 8, check_chain_convergence);
  add("schedule_bookkeeping", "algorithms", 9, check_schedule_bookkeeping);
  add("degenerate_collapses", "algorithms", 10, check_degenerate_collapses);
  add("monotone_trend", "algorithms", 0, check_monotone_trend);
  add("serialization", "harness", 0, check_serialization);
  return c;
}

}  // namespace

const std::vector<Check>& verification_checks() {
  static const std::vector<Check> checks = build_checks();
  return checks;
}

std::vector<Check> acceptance_checks() {
  std::vector<Check> out;
  for (const auto& c : verification_checks()) {
    if (c.criterion > 0) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const Check& a, const Check& b) { return a.criterion < b.criterion; });
  return out;
}

std::vector<CheckResult> run_checks(const std::vector<Check>& checks,
                                    const std::vector<std::string>& only, std::ostream* progress) {
  std::set<std::string> known;
  for (const auto& c : checks) {
    known.insert(c.name);
    known.insert(c.module);
  }
  for (const auto& f : only) {
    if (!known.count(f)) throw ConfigError("unknown check or module '" + f + "'");
  }
  std::vector<CheckResult> results;
  for (const auto& c : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end() &&
        std::find(only.begin(), only.end(), c.module) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = result(false, "completes without error", std::string("exception: ") + e.what());
    }
    r.name = c.name;
    r.module = c.module;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) *progress << format_result_line(r) << std::endl;
    results.push_back(r);
  }
  return results;
}

std::string format_result_line(const CheckResult& r) {
  std::ostringstream out;
  out << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(17) << r.module << std::setw(27)
      << r.name << " bound: " << r.bound << " | measured: " << r.measured << " ("
      << std::fixed << std::setprecision(1) << r.seconds << " s)";
  return out.str();
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back({{"name", r.name},
                   {"module", r.module},
                   {"bound", r.bound},
                   {"measured", r.measured},
                   {"pass", r.pass},
                   {"seconds", r.seconds}});
  }
  const bool all = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
  return nlohmann::json{{"all_pass", all}, {"checks", arr}};
}

}  // namespace npghm
