#include "npghm/oracles.hpp"
#include "npghm/point_mass.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/tabular_mdp.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace npghm;
using namespace testing_support;

namespace {

Mat random_table(int ns, int na, std::uint64_t seed) { return softmax_table(random_vec(ns * na, seed, 1.5), ns, na); }

}  // namespace

TEST(ExactValue, GeometricSeriesAndZeroRewards) {
  const TabularMdp one = make_mdp({{{1.0}}}, {{1.0}}, {1.0}, 0.9);
  EXPECT_NEAR(exact_value(one, Mat::Ones(1, 1)).v[0], 10.0, 1e-12);
  const TabularMdp zero = random_mdp(4, 3, 2).with_scaled_rewards(0.0);
  const ValueFunctions vf = exact_value(zero, random_table(4, 3, 1));
  EXPECT_TRUE(vf.v.isZero(0.0));
  EXPECT_TRUE(vf.q.isZero(0.0));
  EXPECT_TRUE(vf.advantage.isZero(0.0));
}

TEST(ExactValue, TwoStateHandSolution) {
  // State 0 always moves to 1 paying 0; state 1 stays paying 1.
  // V1 = 1 / (1 - g), V0 = g V1.
  const double g = 0.8;
  const TabularMdp m = make_mdp({{{0, 1}}, {{0, 1}}}, {{0.0}, {1.0}}, {1.0, 0.0}, g);
  const Vec v = exact_value(m, Mat::Ones(2, 1)).v;
  EXPECT_NEAR(v[1], 5.0, 1e-12);
  EXPECT_NEAR(v[0], 4.0, 1e-12);
}

TEST(ExactValue, MatchesBellmanIterationAndInvariants) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp m = random_mdp(5, 3, seed);
    const Mat pi = random_table(5, 3, seed + 100);
    const ValueFunctions vf = exact_value(m, pi);
    EXPECT_LE((vf.v - iterate_value(m, pi)).cwiseAbs().maxCoeff(), 1e-10);
    for (int s = 0; s < 5; ++s) {
      EXPECT_NEAR(pi.row(s).dot(vf.advantage.row(s)), 0.0, 1e-10);
      for (int a = 0; a < 3; ++a) EXPECT_EQ(vf.advantage(s, a), vf.q(s, a) - vf.v[s]);
    }
    EXPECT_NEAR(exact_return(m, pi), m.init_dist().dot(iterate_value(m, pi)), 1e-10);
  }
}

TEST(ExactVisitation, EdgeCases) {
  const TabularMdp one = make_mdp({{{1.0}}}, {{1.0}}, {1.0}, 0.9);
  EXPECT_NEAR(exact_visitation(one, Mat::Ones(1, 1))[0], 1.0, 1e-15);
  const TabularMdp myopic = make_mdp({{{0, 1, 0}}, {{0, 0, 1}}, {{1, 0, 0}}}, {{0}, {0}, {0}}, {0.2, 0.3, 0.5}, 0.0);
  const Vec d = exact_visitation(myopic, Mat::Ones(3, 1));
  EXPECT_NEAR(d[0], 0.2, 1e-15);
  EXPECT_NEAR(d[2], 0.5, 1e-15);
  const TabularMdp m = random_mdp(6, 2, 3);
  const Vec dv = exact_visitation(m, random_table(6, 2, 4));
  EXPECT_NEAR(dv.sum(), 1.0, 1e-10);
  EXPECT_GE(dv.minCoeff(), 0.0);
}

TEST(ExactGradient, MatchesFiniteDifferencesOfExactReturn) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp m = random_mdp(4, 3, seed);
    const TabularSoftmaxPolicy p(4, 3, random_vec(12, seed + 10));
    const Vec fd = fd_gradient([&](const Vec& th) { return iterate_return(m, softmax_table(th, 4, 3)); }, p.params());
    const Vec g = exact_policy_gradient(m, p);
    EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
    EXPECT_LE((g - exact_policy_gradient_advantage(m, p)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ExactGradient, ZeroRewardsAndBanditByHand) {
  const TabularMdp zero = random_mdp(3, 2, 1).with_scaled_rewards(0.0);
  EXPECT_TRUE(exact_policy_gradient(zero, TabularSoftmaxPolicy(3, 2, random_vec(6, 2))).isZero(1e-15));
  // Bandit (1, 0) at theta = 0: J = pi_0 / (1-g), dJ/dtheta_0 = pi_0 pi_1 / (1-g) = 2.5.
  const TabularMdp b = bandit({1.0, 0.0}, 0.9);
  const Vec g = exact_policy_gradient(b, TabularSoftmaxPolicy(1, 2));
  EXPECT_NEAR(g[0], 2.5, 1e-12);
  EXPECT_NEAR(g[1], -2.5, 1e-12);
}

TEST(TruncatedGradient, OneStepExpansion) {
  const TabularMdp m = random_mdp(3, 2, 5);
  const TabularSoftmaxPolicy p(3, 2, random_vec(6, 6));
  Vec expected = Vec::Zero(6);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a)
      expected += m.init_dist()[s] * p.probabilities(s)[a] * expected_r(m, s, a) * p.score(s, a);
  EXPECT_LE((exact_truncated_gradient(m, p, 1) - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(exact_truncated_gradient(m, p, 0), ConfigError);
}

TEST(TruncatedGradient, MatchesFiniteDifferencesAndConverges) {
  const TabularMdp m = random_mdp(3, 2, 7);
  const TabularSoftmaxPolicy p(3, 2, random_vec(6, 8));
  for (int h : {2, 5, 9}) {
    const Vec fd = fd_gradient([&](const Vec& th) { return forward_truncated_return(m, softmax_table(th, 3, 2), h); },
                               p.params());
    EXPECT_LE((exact_truncated_gradient(m, p, h) - fd).norm() / std::max(1.0, fd.norm()), 1e-6) << h;
    EXPECT_NEAR(exact_truncated_return(m, p.probability_table(), h),
                enumerate_truncated_return(m, p.probability_table(), std::min(h, 5)) +
                    (h > 5 ? forward_truncated_return(m, p.probability_table(), h) -
                                 forward_truncated_return(m, p.probability_table(), 5)
                           : 0.0),
                1e-12);
  }
  const Vec full = exact_policy_gradient(m, p);
  const ConstantsBundle c = compute_constants(2.0, 0.5, 0.0, m.gamma(), 0);
  for (int h : {5, 10, 20, 50}) {
    const double gap = (exact_truncated_gradient(m, p, h) - full).norm();
    const ConstantsBundle ch = compute_constants(2.0, 0.5, 0.0, m.gamma(), h);
    EXPECT_LE(gap, ch.grad_truncation * std::pow(m.gamma(), h)) << h;
  }
  EXPECT_LE((exact_truncated_gradient(m, p, 400) - full).norm(), 1e-12 * c.grad_norm_bound);
}

TEST(ExactFim, SingleStateAndStructure) {
  const TabularMdp b = bandit({0.3, 0.1});
  const Mat f = exact_fim(b, TabularSoftmaxPolicy(1, 2));
  Mat expected(2, 2);
  expected << 0.25, -0.25, -0.25, 0.25;
  EXPECT_LE((f - expected).cwiseAbs().maxCoeff(), 1e-15);

  const TabularMdp m = random_mdp(4, 3, 9);
  const TabularSoftmaxPolicy p(4, 3, random_vec(12, 10));
  const Mat fm = exact_fim(m, p);
  EXPECT_LE((fm - fm.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat> eig(fm);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-14);
  // Row sums vanish per state block: score sums to zero against pi.
  EXPECT_LE((fm * Vec::Ones(12)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OptimalReturn, HandExamplesAndDominance) {
  EXPECT_NEAR(optimal_return(make_mdp({{{1.0}}}, {{1.0}}, {1.0}, 0.9)), 10.0, 1e-9);
  EXPECT_NEAR(optimal_return(bandit({1.0, 0.0}, 0.9)), 10.0, 1e-9);
  const TabularMdp m = random_mdp(5, 3, 11);
  const OptimalSolution opt = solve_optimal(m);
  EXPECT_NEAR(opt.j_star, exact_return(m, opt.greedy_table), 1e-12);
  for (std::uint64_t seed = 0; seed < 100; ++seed) EXPECT_GT(opt.j_star, exact_return(m, random_table(5, 3, seed)));
}

TEST(GreedyTable, TiesGoToLowestAction) {
  Mat q(2, 3);
  q << 1.0, 1.0, 0.5, 0.0, 2.0, 2.0;
  const Mat g = greedy_table(q);
  EXPECT_EQ(g(0, 0), 1.0);
  EXPECT_EQ(g(0, 1), 0.0);
  EXPECT_EQ(g(1, 1), 1.0);
  EXPECT_EQ(g.sum(), 2.0);
}

TEST(CompatibleError, ZeroDirectionAndQuadraticIdentity) {
  const TabularMdp m = random_mdp(3, 2, 12);
  const TabularSoftmaxPolicy p(3, 2, random_vec(6, 13));
  const Mat pi = p.probability_table();
  const ValueFunctions vf = exact_value(m, pi);
  const Vec d = exact_visitation(m, pi);
  double half_a2 = 0.0;
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) half_a2 += 0.5 * d[s] * pi(s, a) * vf.advantage(s, a) * vf.advantage(s, a);
  EXPECT_NEAR(compatible_approx_error(m, p, Vec::Zero(6)), half_a2, 1e-12);

  const Vec w = random_vec(6, 14);
  const double l0 = compatible_approx_error(m, p, Vec::Zero(6));
  const double l1 = compatible_approx_error(m, p, w);
  const double l2 = compatible_approx_error(m, p, 2 * w);
  const double l3 = compatible_approx_error(m, p, 3 * w);
  // Second differences of a quadratic are constant.
  EXPECT_NEAR(l2 - 2 * l1 + l0, l3 - 2 * l2 + l1, 1e-10);
}

TEST(CompatibleError, StationaryAtPseudoinverseDirection) {
  const TabularMdp m = random_mdp(4, 2, 15);
  const TabularSoftmaxPolicy p(4, 2, random_vec(8, 16));
  const Mat f = exact_fim(m, p);
  const Vec w_star = f.completeOrthogonalDecomposition().pseudoInverse() * exact_policy_gradient(m, p);
  const Vec grad = fd_gradient([&](const Vec& w) { return compatible_approx_error(m, p, w); }, w_star, 1e-4);
  EXPECT_LE(grad.norm(), 1e-8);
  EXPECT_LE(approximation_bias(m, p, w_star), 1e-8);
  EXPECT_GT(approximation_bias(m, p, Vec::Zero(8)), 1e-6);
}

TEST(PerformanceDifference, ExamplesAndLemma) {
  const TabularMdp m = random_mdp(4, 3, 17);
  const Mat a = random_table(4, 3, 18);
  EXPECT_NEAR(performance_difference(m, a, a), 0.0, 1e-12);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mat b = random_table(4, 3, seed + 40);
    EXPECT_NEAR(performance_difference(m, b, a), iterate_return(m, b) - iterate_return(m, a), 1e-8);
  }
  const Mat greedy = greedy_table(exact_value(m, a).q);
  EXPECT_GE(performance_difference(m, greedy, a), 0.0);
}

TEST(Constants, ClosedForms) {
  const ConstantsBundle c = compute_constants(1.0, 1.0, 0.5, 0.5, 3);
  EXPECT_DOUBLE_EQ(c.smoothness, 8.0);
  EXPECT_DOUBLE_EQ(c.kappa, 2.0);
  EXPECT_DOUBLE_EQ(c.hessian_variance, 2.0 * 9.0 / 0.125 + 2.0 / 0.0625);
  EXPECT_DOUBLE_EQ(c.grad_truncation, 2.0 * std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(c.hessian_truncation, 4.0 * 5.0);
  EXPECT_NEAR(compute_constants(1.0, 1.0, 0.5, 0.9, 3).grad_variance, 1000.0, 1e-9);
  EXPECT_TRUE(std::isinf(compute_constants(1.0, 1.0, 0.0, 0.9, 3).kappa));
  EXPECT_THROW(compute_constants(0.0, 0.0, 1.0, 0.9, 3), DomainError);
  EXPECT_THROW(compute_constants(1.0, 1.0, 1.0, 1.0, 3), DomainError);
  const double alpha0 = theoretical_alpha0(c, 20);
  EXPECT_NEAR(alpha0 * alpha0 * c.kappa * 20 * (12 * 64 + 6 * c.hessian_variance), 0.25, 1e-12);
}

TEST(Lqr, DegenerateCases) {
  PointMassParams p;
  p.q_s = 0.0;
  p.q_a = 0.0;
  EXPECT_EQ(lqr_optimal_return(PointMassEnv(p)), 0.0);
  PointMassParams r;
  r.a_dyn = 0.0;
  r.b_dyn = 0.0;
  r.noise_std = 0.0;
  r.init_radius = 0.0;
  EXPECT_EQ(lqr_optimal_return(PointMassEnv(r)), 0.0);
}

TEST(Lqr, RiccatiMatchesLinearPolicyEvaluation) {
  const PointMassEnv env;
  const PointMassParams& p = env.params();
  const LqrSolution sol = solve_lqr(env);
  EXPECT_LE(sol.residual, 1e-10);
  const double scale = p.q_s * p.state_radius * p.state_radius + p.q_a * p.action_radius * p.action_radius;
  // Discounted cost of a = -k s, evaluated directly.
  auto cost_of = [&](double k) {
    const double closed = p.a_dyn - p.b_dyn * k;
    const double pk = (p.q_s + p.q_a * k * k) / (1.0 - p.gamma * closed * closed);
    const double s2 = p.init_radius * p.init_radius / 3.0;
    return -(pk * s2 + p.gamma * pk * p.noise_std * p.noise_std / (1.0 - p.gamma)) / scale;
  };
  const double k_star = p.gamma * p.a_dyn * p.b_dyn * sol.riccati / (p.q_a + p.gamma * p.b_dyn * p.b_dyn * sol.riccati);
  EXPECT_NEAR(cost_of(k_star), sol.j_star, 1e-12);
  for (double dk : {-0.1, -0.01, 0.01, 0.1}) EXPECT_LT(cost_of(k_star + dk), sol.j_star);
}

TEST(ComputeExact, BundleIsConsistent) {
  const TabularMdp m = random_mdp(3, 2, 19);
  const TabularSoftmaxPolicy p(3, 2, random_vec(6, 20));
  const ExactMdpQuantities q = compute_exact(m, p);
  EXPECT_NEAR(q.j_rho, exact_return(m, p), 1e-14);
  EXPECT_NEAR(q.j_star, optimal_return(m), 1e-12);
  EXPECT_NEAR(q.visitation.sum(), 1.0, 1e-10);
  const auto j = to_json(q);
  EXPECT_EQ(j.at("grad_J").size(), 6u);
  EXPECT_DOUBLE_EQ(j.at("J_rho").get<double>(), q.j_rho);
  EXPECT_THROW(compute_exact(m, TabularSoftmaxPolicy(2, 2)), ConfigError);
}
