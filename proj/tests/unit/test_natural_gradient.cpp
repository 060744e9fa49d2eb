#include "npghm/gaussian_policy.hpp"
#include "npghm/natural_gradient.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/tabular_mdp.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace npghm;
using namespace testing_support;

namespace {

/// Scores sqrt(d) * (+-1) * e_i with i uniform: E[x x^T] = I.
ScoreSampler isotropic(Index d) {
  return [d](Rng& rng) {
    Vec x = Vec::Zero(d);
    const auto i = static_cast<Index>(uniform01(rng) * static_cast<double>(d));
    x[i] = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * std::sqrt(static_cast<double>(d));
    return x;
  };
}

}  // namespace

TEST(NpgSgd, ZeroTargetStaysAtZero) {
  Rng rng(1);
  const Vec w = npg_sgd(isotropic(4), Vec::Zero(4), 50, 0.1, Vec::Zero(4), rng);
  EXPECT_TRUE(w.isZero(0.0));
}

TEST(NpgSgd, OneStepHandSimulation) {
  // w1 = w0 - eta((x.w0) x - u) = eta u from w0 = 0; output (w0 + w1) / 2.
  Rng rng(2);
  const Vec u = random_vec(3, 3);
  const Vec w = npg_sgd(isotropic(3), u, 1, 0.2, Vec::Zero(3), rng);
  EXPECT_LE((w - 0.1 * u).norm(), 1e-16);
}

TEST(NpgSgd, ZeroIterationsReturnsStart) {
  Rng rng(4);
  const Vec w0 = random_vec(3, 5);
  EXPECT_TRUE((npg_sgd(isotropic(3), random_vec(3, 6), 0, 0.1, w0, rng).array() == w0.array()).all());
  EXPECT_THROW(npg_sgd(isotropic(3), random_vec(3, 6), 5, 0.0, w0, rng), ConfigError);
  EXPECT_THROW(npg_sgd(isotropic(3), random_vec(2, 6), 5, 0.1, w0, rng), DimensionError);
}

TEST(NpgSgd, ErrorDecaysLikeOneOverK) {
  const Vec u = random_vec(4, 7);
  const double eta = 1.0 / (4.0 * 4.0);  // M_g = d for the isotropic sampler
  Rng rng(8);
  auto mse = [&](int k) {
    double total = 0.0;
    for (int rep = 0; rep < 50; ++rep) total += (npg_sgd(isotropic(4), u, k, eta, Vec::Zero(4), rng) - u).squaredNorm();
    return total / 50;
  };
  const double ratio = mse(400) / mse(3200);
  EXPECT_GE(ratio, 4.0);
  EXPECT_LE(ratio, 16.0);
}

TEST(ExactDirection, IdentityAndDiagonal) {
  const Vec u = random_vec(3, 9);
  EXPECT_LE((exact_npg_direction(Mat::Identity(3, 3), u, 0.0) - u).norm(), 1e-15);
  Mat f = Mat::Zero(2, 2);
  f.diagonal() << 2.0, 4.0;
  Vec v(2);
  v << 2.0, 4.0;
  EXPECT_LE((exact_npg_direction(f, v, 0.0) - Vec::Ones(2)).norm(), 1e-15);
}

TEST(ExactDirection, SingularSoftmaxFisherGivesMinimumNorm) {
  // Single-state two-action softmax at theta = 0: F = [[1, -1], [-1, 1]] / 4.
  Mat f(2, 2);
  f << 0.25, -0.25, -0.25, 0.25;
  Vec u(2);
  u << 0.3, -0.3;  // in range(F)
  const Vec w = exact_npg_direction(f, u, 0.0);
  EXPECT_LE((f * w - u).norm(), 1e-10);
  EXPECT_NEAR(w.sum(), 0.0, 1e-12);  // no component along the null vector (1, 1)
}

TEST(ExactDirection, DampedSolve) {
  Mat f(2, 2);
  f << 2.0, 0.5, 0.5, 1.0;
  const Vec u = random_vec(2, 10);
  const Vec w = exact_npg_direction(f, u, 0.1);
  EXPECT_LE(((f + 0.1 * Mat::Identity(2, 2)) * w - u).norm(), 1e-14);
}

TEST(ExactDirection, RejectsAsymmetricOrBadDamping) {
  Mat f(2, 2);
  f << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(exact_npg_direction(f, Vec::Ones(2), 0.0), DomainError);
  EXPECT_THROW(exact_npg_direction(Mat::Identity(2, 2), Vec::Ones(2), -1.0), DomainError);
  EXPECT_THROW(exact_npg_direction(Mat::Identity(2, 2), Vec::Ones(3), 0.0), DimensionError);
}

TEST(Adam, ZeroTargetAndDeterminism) {
  Rng rng(11);
  EXPECT_TRUE(adam_subsolver(isotropic(4), Vec::Zero(4), 10, AdamParams{}, Vec::Zero(4), rng).isZero(0.0));
  Rng a(12), b(12);
  const Vec u = random_vec(4, 13);
  const Vec w1 = adam_subsolver(isotropic(4), u, 10, AdamParams{}, Vec::Zero(4), a);
  const Vec w2 = adam_subsolver(isotropic(4), u, 10, AdamParams{}, Vec::Zero(4), b);
  EXPECT_TRUE((w1.array() == w2.array()).all());
}

TEST(Adam, ConvergesOnIdentityFisher) {
  Rng rng(14);
  Vec u(4);
  u << 1.0, -0.5, 0.3, 0.05;
  // Stationary jitter of the last iterate scales like sqrt(lr).
  AdamParams params;
  params.lr = 1e-5;
  const Vec w = adam_subsolver(isotropic(4), u, 1'000'000, params, Vec::Zero(4), rng);
  EXPECT_LE((w - u).norm() / u.norm(), 1e-2);
}

TEST(EstimateFim, SingleStateSoftmaxIsExact) {
  const TabularSoftmaxPolicy p(1, 2);
  const ScoreSampler sampler = [&p](Rng& rng) { return p.score(0, p.sample_action(0, rng)); };
  Rng rng(16);
  const Mat f = estimate_fim(sampler, 2, 1000, rng);
  Mat expected(2, 2);
  expected << 0.25, -0.25, -0.25, 0.25;
  EXPECT_LE((f - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EstimateFim, WhitenedGaussianApproachesIdentityOverSigmaSquared) {
  const double sigma = 0.7;
  const TruncatedLinearGaussianPolicy p(FeatureMap{FeatureMap::Kind::kAffine, 1.0, 2.0}, sigma,
                                        std::numeric_limits<double>::infinity());
  auto draw = [&p](Rng& rng) {
    const double s = std::sqrt(3.0) * (2 * uniform01(rng) - 1);
    return p.score(s, p.sample_action(s, rng));
  };
  constexpr int n = 100'000;
  Rng rng(17);
  const Mat f = estimate_fim(draw, 2, n, rng);
  // Per-entry standard errors from a second pass.
  Rng rng2(17);
  Mat sq = Mat::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vec x = draw(rng2);
    sq += ((x * x.transpose()).array() - f.array()).square().matrix();
  }
  const Mat se = (sq / (n - 1.0) / n).cwiseSqrt();
  const Mat target = Mat::Identity(2, 2) / (sigma * sigma);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_LE(std::abs(f(i, j) - target(i, j)), 4 * se(i, j)) << i << "," << j;
}

TEST(EstimateFim, OneSampleIsOuterProduct) {
  const Vec x = random_vec(3, 18);
  const ScoreSampler fixed = [&x](Rng&) { return x; };
  Rng rng(19);
  EXPECT_LE((estimate_fim(fixed, 3, 1, rng) - x * x.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(estimate_fim(fixed, 3, 0, rng), ConfigError);
}

TEST(Helpers, RecommendedIterationsAndDefaultEta) {
  EXPECT_EQ(recommended_iterations(1.0, 2), 48.0 * 9.0);
  EXPECT_EQ(recommended_iterations(2.0, 8), 48.0 * 16.0 * 25.0);
  EXPECT_DOUBLE_EQ(default_eta(2.0), 0.125);
  EXPECT_DOUBLE_EQ(default_eta(2.0, 4.0), 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(default_eta(2.0, 1.0), 0.125);
  EXPECT_THROW(default_eta(std::numeric_limits<double>::infinity()), ConfigError);
}

TEST(SolveSubproblem, SgdFromPolicySamplerMatchesDirectCall) {
  const TabularMdp m = random_mdp(3, 2, 20);
  const TabularSoftmaxPolicy p(3, 2, random_vec(6, 21));
  const Vec u = random_vec(6, 22);
  auto sa = [&](Rng& rng) { return sample_state_action(m, p, rng); };
  SubproblemConfig cfg;
  cfg.iterations = 25;
  Rng a(23), b(23);
  const Vec w = solve_subproblem(sa, p, u, cfg, a);
  const ScoreSampler scores = [&](Rng& rng) {
    const auto [s, act] = sample_state_action(m, p, rng);
    return p.score(s, act);
  };
  const Vec ref = npg_sgd(scores, u, 25, 1.0 / 8.0, Vec::Zero(6), b);
  EXPECT_TRUE((w.array() == ref.array()).all());
  cfg.kind = SubproblemKind::kExact;
  EXPECT_THROW(solve_subproblem(sa, p, u, cfg, a), ConfigError);
}

TEST(SolveSubproblem, WarmStartUsesPreviousDirection) {
  const TabularMdp m = random_mdp(3, 2, 24);
  const TabularSoftmaxPolicy p(3, 2);
  auto sa = [&](Rng& rng) { return sample_state_action(m, p, rng); };
  SubproblemConfig cfg;
  cfg.iterations = 0;
  const Vec prev = random_vec(6, 25);
  Rng rng(26);
  EXPECT_TRUE(solve_subproblem(sa, p, random_vec(6, 27), cfg, rng, &prev).isZero(0.0));
  cfg.warm_start = true;
  EXPECT_TRUE((solve_subproblem(sa, p, random_vec(6, 27), cfg, rng, &prev).array() == prev.array()).all());
}
