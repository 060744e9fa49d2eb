#include "npghm/oracles.hpp"
#include "npghm/point_mass.hpp"
#include "npghm/rng.hpp"
#include "npghm/sampling.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/tabular_mdp.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace npghm;
using namespace testing_support;

namespace {

TabularMdp one_state_unit_reward(double gamma = 0.9) {
  return make_mdp({{{1.0}}}, {{1.0}}, {1.0}, gamma);
}

}  // namespace

TEST(TabularMdp, RejectsBadTables) {
  EXPECT_THROW(make_mdp({{{0.5, 0.4}}, {{1.0, 0.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 0.9), ConfigError);
  EXPECT_THROW(make_mdp({{{1.0}}}, {{2.0}}, {1.0}, 0.9), ConfigError);
  EXPECT_THROW(make_mdp({{{1.0}}}, {{0.0}}, {1.0}, 1.0), ConfigError);
  EXPECT_THROW(make_mdp({{{1.0}}}, {{0.0}}, {0.5}, 0.9), ConfigError);
}

TEST(TabularMdp, TextFormatRoundTrip) {
  const TabularMdp m = random_mdp(3, 2, 4);
  const TabularMdp back = parse_mdp(format_mdp(m));
  EXPECT_EQ(back.transition_table(), m.transition_table());
  EXPECT_EQ(back.reward_table(), m.reward_table());
  EXPECT_EQ(back.gamma(), m.gamma());
  EXPECT_TRUE((back.init_dist().array() == m.init_dist().array()).all());
}

TEST(TabularMdp, ParsesCommentsAndRejectsShortInput) {
  const TabularMdp m = parse_mdp("# one state\n1 1\n0.5\n1\n1 # P\n0.25\n");
  EXPECT_EQ(m.n_states(), 1);
  EXPECT_DOUBLE_EQ(m.reward(0, 0, 0), 0.25);
  EXPECT_THROW(parse_mdp("2 1\n0.5\n1 0\n1 0\n"), ConfigError);
}

TEST(TabularMdp, ScaledRewardsKeepDynamics) {
  const TabularMdp m = chain(4);
  const TabularMdp z = m.with_scaled_rewards(0.0);
  EXPECT_EQ(z.transition_table(), m.transition_table());
  for (double r : z.reward_table()) EXPECT_EQ(r, 0.0);
}

TEST(SampleTrajectory, DegenerateMdpEmitsConstantRewards) {
  const TabularMdp m = one_state_unit_reward();
  const TabularSoftmaxPolicy p(1, 1);
  Rng rng(3);
  const auto traj = sample_trajectory(m, p, 3, rng);
  EXPECT_EQ(traj.rewards, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(traj.states.size(), 4u);
}

TEST(SampleTrajectory, MinimalHorizon) {
  const TabularMdp m = random_mdp(4, 3, 1);
  Rng rng(5);
  const auto traj = sample_trajectory(m, TabularSoftmaxPolicy(4, 3), 1, rng);
  EXPECT_EQ(traj.horizon(), 1);
  EXPECT_EQ(traj.rewards.size(), 1u);
  EXPECT_THROW(sample_trajectory(m, TabularSoftmaxPolicy(4, 3), 0, rng), ConfigError);
}

TEST(SampleTrajectory, MismatchedSpacesAreConfigErrors) {
  const TabularMdp m = random_mdp(4, 3, 1);
  Rng rng(5);
  EXPECT_THROW(sample_trajectory(m, TabularSoftmaxPolicy(4, 2), 3, rng), ConfigError);
}

TEST(SampleTrajectory, TwoStateChainFollowsHandTrace) {
  // Near-deterministic "always right" policy: 0 -> 1 -> 1 -> ...; the right
  // end pays 1 on every step once reached.
  const TabularMdp m = chain(2);
  Vec theta(4);
  theta << -50, 50, -50, 50;
  const TabularSoftmaxPolicy p(2, 2, theta);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto traj = sample_trajectory(m, p, 5, rng);
    const int s0 = traj.states[0];
    for (int h = 0; h < 5; ++h) {
      EXPECT_EQ(traj.actions[h], 1);
      EXPECT_EQ(traj.states[h + 1], 1);
      EXPECT_EQ(traj.rewards[h], traj.states[h] == 1 ? 1.0 : 0.0);
    }
    EXPECT_TRUE(s0 == 0 || s0 == 1);
  }
}

TEST(SampleTrajectory, SeedReproducible) {
  const TabularMdp m = random_mdp(4, 3, 9);
  const TabularSoftmaxPolicy p(4, 3, random_vec(12, 2));
  Rng a(77), b(77);
  const auto t1 = sample_trajectory(m, p, 40, a);
  const auto t2 = sample_trajectory(m, p, 40, b);
  EXPECT_EQ(t1.states, t2.states);
  EXPECT_EQ(t1.actions, t2.actions);
  EXPECT_EQ(t1.rewards, t2.rewards);
}

TEST(DiscountedReturn, HandExpansion) {
  Trajectory<int, int> traj{{0, 0, 0, 0}, {0, 0, 0}, {1.0, 1.0, 1.0}};
  EXPECT_DOUBLE_EQ(discounted_return(traj, 0.5), 1.75);
  traj.rewards = {0.0, 0.0, 0.0};
  EXPECT_EQ(discounted_return(traj, 0.5), 0.0);
  EXPECT_THROW(discounted_return(traj, 1.0), DomainError);
}

TEST(DiscountedReturn, LongHorizonApproachesGeometricSeries) {
  const TabularMdp m = one_state_unit_reward(0.9);
  Rng rng(1);
  const auto traj = sample_trajectory(m, TabularSoftmaxPolicy(1, 1), 400, rng);
  EXPECT_NEAR(discounted_return(traj, 0.9), 10.0, 1e-12);
}

TEST(SampleStateAction, SingleStateAlwaysReturnsIt) {
  const TabularMdp m = bandit({0.3, -0.2});
  Rng rng(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_state_action(m, TabularSoftmaxPolicy(1, 2), rng).first, 0);
}

TEST(SampleStateAction, ZeroDiscountDrawsFromInitialDistribution) {
  // rho puts all mass on state 2; with gamma = 0 the geometric horizon is 0.
  const TabularMdp m = make_mdp({{{0, 1, 0}}, {{0, 0, 1}}, {{1, 0, 0}}}, {{0}, {0}, {0}}, {0, 0, 1}, 0.0);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(sample_state_action(m, TabularSoftmaxPolicy(3, 1), rng).first, 2);
}

TEST(SampleStateAction, TwoStateChainVisitationWithinFourSE) {
  const TabularMdp m = chain(2, 0.9, 0.1, 0.3);
  const TabularSoftmaxPolicy p(2, 2, random_vec(4, 12));
  const Vec exact = exact_visitation(m, p.probability_table());
  // Independent check of the oracle itself: d = (1-gamma) sum_h gamma^h rho P^h.
  Mat pp = Mat::Zero(2, 2);
  const Mat pi = p.probability_table();
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      for (int t = 0; t < 2; ++t) pp(s, t) += pi(s, a) * m.transition(s, a, t);
  Vec series = Vec::Zero(2);
  Vec row = m.init_dist();
  double g = 1.0;
  for (int h = 0; h < 2000; ++h, g *= 0.9) {
    series += (1 - 0.9) * g * row;
    row = pp.transpose() * row;
  }
  EXPECT_LT((series - exact).cwiseAbs().maxCoeff(), 1e-12);

  constexpr int n = 1'000'000;
  Rng rng(21);
  Vec counts = Vec::Zero(2);
  for (int i = 0; i < n; ++i) counts[sample_state_action(m, p, rng).first] += 1;
  for (int s = 0; s < 2; ++s) {
    const double freq = counts[s] / n;
    const double se = std::sqrt(exact[s] * (1 - exact[s]) / n);
    EXPECT_LE(std::abs(freq - exact[s]), 4 * se) << "state " << s;
  }
}

TEST(GeometricHorizon, RespectsCap) {
  Rng rng(2);
  const int cap = geometric_horizon_cap(0.9);
  EXPECT_EQ(cap, 100);
  for (int i = 0; i < 10000; ++i) EXPECT_LE(sample_geometric_horizon(0.9, rng), cap);
  EXPECT_EQ(sample_geometric_horizon(0.0, rng), 0);
}

TEST(PointMass, RewardsBoundedAndStatesClipped) {
  const PointMassEnv env;
  Rng rng(6);
  double s = env.initial_state(rng);
  EXPECT_LE(std::abs(s), 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = 10.0 * (uniform01(rng) - 0.5);
    const auto step = env.step(s, a, rng);
    EXPECT_LE(step.reward, 0.0);
    EXPECT_GE(step.reward, -1.0);
    EXPECT_LE(std::abs(step.next_state), env.params().state_radius);
    s = step.next_state;
  }
}

TEST(PointMass, NoiselessDynamicsMatchFormula) {
  PointMassParams p;
  p.noise_std = 0.0;
  const PointMassEnv env(p);
  Rng rng(0);
  const auto step = env.step(0.4, -0.2, rng);
  EXPECT_DOUBLE_EQ(step.next_state, 0.4 + 0.5 * -0.2);
  EXPECT_DOUBLE_EQ(step.reward, -(0.16 + 0.1 * 0.04) / (4.0 + 0.1 * 4.0));
  EXPECT_DOUBLE_EQ(env.step(1.9, 2.0, rng).next_state, 2.0);
}

TEST(RngStreams, IndependentAndReproducible) {
  Rng a = make_stream(5, Stream::kTrajectory);
  Rng b = make_stream(5, Stream::kTrajectory);
  Rng c = make_stream(5, Stream::kEvaluation);
  Rng d = make_stream(6, Stream::kTrajectory);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  EXPECT_EQ(make_stream(1, "label")(), make_stream(1, "label")());
  EXPECT_NE(make_stream(1, "label")(), make_stream(1, "other")());
}
