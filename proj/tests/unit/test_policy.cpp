#include "npghm/gaussian_policy.hpp"
#include "npghm/policy.hpp"
#include "npghm/softmax_policy.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <numbers>

using namespace npghm;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

FeatureMap unit_affine() { return FeatureMap{FeatureMap::Kind::kAffine, 1.0, 2.0}; }

/// Truncated normal density written out from its definition.
double truncated_density(double a, double mu, double sigma, double c) {
  const double z = (a - mu) / sigma;
  if (std::abs(z) > c) return 0.0;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi) * std::erf(c / std::sqrt(2.0)));
}

}  // namespace

TEST(SoftmaxLogProb, UniformTwoActions) {
  EXPECT_DOUBLE_EQ(TabularSoftmaxPolicy(3, 2).log_prob(1, 0), std::log(0.5));
}

TEST(SoftmaxLogProb, HandEvaluatedLogits) {
  Vec theta(2);
  theta << 1.0, 0.0;
  const TabularSoftmaxPolicy p(1, 2, theta);
  EXPECT_NEAR(p.log_prob(0, 0), std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-15);
}

TEST(SoftmaxLogProb, LargeLogitsStayFinite) {
  Vec theta(3);
  theta << 800.0, 0.0, -800.0;
  const TabularSoftmaxPolicy p(1, 3, theta);
  EXPECT_NEAR(p.log_prob(0, 0), 0.0, 1e-300);
  EXPECT_NEAR(p.log_prob(0, 1), -800.0, 1e-9);
  EXPECT_TRUE(p.probabilities(0).allFinite());
}

TEST(SoftmaxScore, SingleStateUniform) {
  const TabularSoftmaxPolicy p(1, 2);
  const Vec g = p.score(0, 0);
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
}

TEST(SoftmaxScore, OnlyOwnStateBlockIsNonzero) {
  const TabularSoftmaxPolicy p(3, 2, random_vec(6, 1));
  const Vec g = p.score(1, 1);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[4], 0.0);
  EXPECT_EQ(g[5], 0.0);
  EXPECT_NEAR(g[2] + g[3], 0.0, 1e-15);
}

TEST(SoftmaxScore, FiniteDifferenceWithinOneMillionth) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularSoftmaxPolicy p(3, 4, random_vec(12, seed));
    const int s = static_cast<int>(seed % 3), a = static_cast<int>(seed % 4);
    const Vec fd = fd_gradient([&](const Vec& th) { return p.with_params(th).log_prob(s, a); }, p.params());
    EXPECT_LE((fd - p.score(s, a)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(SoftmaxHvp, ZeroDirectionAndFiniteDifference) {
  const TabularSoftmaxPolicy p(2, 3, random_vec(6, 4));
  EXPECT_TRUE(p.log_density_hvp(1, 2, Vec::Zero(6)).isZero(0.0));
  const Vec x = random_vec(6, 5);
  const double eps = 1e-5;
  const Vec fd = (p.with_params(p.params() + eps * x).score(1, 2) - p.with_params(p.params() - eps * x).score(1, 2)) / (2 * eps);
  EXPECT_LE((fd - p.log_density_hvp(1, 2, x)).norm() / std::max(1.0, fd.norm()), 1e-5);
  EXPECT_THROW(p.log_density_hvp(1, 2, Vec::Zero(5)), DimensionError);
}

TEST(SoftmaxSampling, DeterministicLimitAndUniformFrequencies) {
  Vec theta(3);
  theta << 0.0, 1000.0, 0.0;
  const TabularSoftmaxPolicy sharp(1, 3, theta);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sharp.sample_action(0, rng), 1);

  const TabularSoftmaxPolicy uniform(1, 4);
  std::vector<int> counts(4, 0);
  constexpr int n = 100'000;
  for (int i = 0; i < n; ++i) ++counts[uniform.sample_action(0, rng)];
  const double se = std::sqrt(0.25 * 0.75 / n);
  for (int c : counts) EXPECT_LE(std::abs(c / double(n) - 0.25), 4 * se);
}

TEST(SoftmaxErrors, OutOfRangeStateOrAction) {
  const TabularSoftmaxPolicy p(2, 2);
  EXPECT_THROW(p.log_prob(2, 0), DomainError);
  EXPECT_THROW(p.score(0, -1), DomainError);
  EXPECT_THROW(TabularSoftmaxPolicy(2, 2, Vec::Zero(3)), DimensionError);
}

TEST(GaussianLogProb, UntruncatedPeak) {
  const TruncatedLinearGaussianPolicy p(unit_affine(), 1.0, kInf);
  EXPECT_NEAR(p.log_prob(0.3, p.mean(0.3)), -0.5 * std::log(2 * std::numbers::pi), 1e-15);
}

TEST(GaussianLogProb, MatchesTruncatedDensityFormula) {
  Vec theta(2);
  theta << 0.7, -0.2;
  const TruncatedLinearGaussianPolicy p(unit_affine(), 0.4, 2.5, theta);
  for (double a : {-0.9, -0.5, 0.0, 0.4, 0.6}) {
    const double s = 0.5;
    const double ref = truncated_density(a, 0.7 * 0.5 - 0.2, 0.4, 2.5);
    if (ref == 0.0) {
      EXPECT_THROW(p.log_prob(s, a), SupportError);
      EXPECT_EQ(p.log_density(s, a), -kInf);
    } else {
      EXPECT_NEAR(p.log_prob(s, a), std::log(ref), 1e-13);
    }
  }
}

TEST(GaussianScore, ZeroAtMeanAndFiniteDifferences) {
  Vec theta(2);
  theta << 0.3, 0.1;
  const TruncatedLinearGaussianPolicy p(unit_affine(), 0.5, 3.0, theta);
  EXPECT_TRUE(p.score(1.2, p.mean(1.2)).isZero(1e-15));
  const double s = -0.8, a = p.mean(s) + 0.6;
  const Vec fd = fd_gradient([&](const Vec& th) { return p.with_params(th).log_prob(s, a); }, theta);
  EXPECT_LE((fd - p.score(s, a)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GaussianHvp, ClosedForm) {
  const TruncatedLinearGaussianPolicy p(unit_affine(), 0.5, kInf, random_vec(2, 3));
  const Vec x = random_vec(2, 4);
  const double s = 0.9;
  Vec phi(2);
  phi << s, 1.0;
  const Vec expected = -(phi.dot(x)) * phi / 0.25;
  EXPECT_LE((p.log_density_hvp(s, 0.1, x) - expected).norm(), 1e-14);
  EXPECT_TRUE(p.log_density_hvp(s, 0.1, Vec::Zero(2)).isZero(0.0));
}

TEST(GaussianSampling, StaysInsideWindow) {
  const TruncatedLinearGaussianPolicy p(unit_affine(), 0.3, 1.5, random_vec(2, 9));
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    const double s = 2 * uniform01(rng) - 1;
    const double a = p.sample_action(s, rng);
    EXPECT_LE(std::abs(a - p.mean(s)), 1.5 * 0.3);
  }
}

TEST(GaussianBounds, DeclaredConstants) {
  const TruncatedLinearGaussianPolicy p(FeatureMap{FeatureMap::Kind::kAffine, 2.0, 2.0}, 0.5, 3.0);
  // R_phi = sqrt(1 + 1)
  EXPECT_DOUBLE_EQ(p.declared_mg(), 9.0 * 2.0 / 0.25);
  EXPECT_DOUBLE_EQ(p.declared_mh(), 2.0 / 0.25);
  EXPECT_TRUE(std::isinf(TruncatedLinearGaussianPolicy(unit_affine(), 1.0, kInf).declared_mg()));
  EXPECT_THROW(TruncatedLinearGaussianPolicy(unit_affine(), 0.0), ConfigError);
}

TEST(MeasuredBounds, SoftmaxScoreBoundedByTwo) {
  const TabularSoftmaxPolicy p(4, 5, random_vec(20, 11, 3.0));
  std::vector<std::pair<int, int>> samples;
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 5; ++a) samples.emplace_back(s, a);
  const MeasuredBounds b = measured_bounds(p, samples);
  EXPECT_LE(b.mg_hat, 2.0);
  EXPECT_LE(b.mh_hat, 0.5 + 1e-12);
}

TEST(MeasuredBounds, WhitenedGaussianFisherIsIdentityOverSigmaSquared) {
  // s uniform on [-sqrt3, sqrt3] makes E[phi phi^T] = I for affine features.
  const double sigma = 0.5;
  const TruncatedLinearGaussianPolicy p(FeatureMap{FeatureMap::Kind::kAffine, 1.0, 2.0}, sigma, kInf);
  Rng rng(12);
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 100'000; ++i) {
    const double s = std::sqrt(3.0) * (2 * uniform01(rng) - 1);
    samples.emplace_back(s, p.sample_action(s, rng));
  }
  const MeasuredBounds b = measured_bounds(p, samples);
  EXPECT_GT(b.mu_f_hat, 0.0);
  EXPECT_NEAR(b.mu_f_hat * sigma * sigma, 1.0, 0.03);
}

TEST(MeasuredBounds, SingleStateSoftmaxFisherIsSingular) {
  const TabularSoftmaxPolicy p(1, 3, random_vec(3, 6));
  Rng rng(1);
  std::vector<std::pair<int, int>> samples;
  for (int i = 0; i < 1000; ++i) samples.emplace_back(0, p.sample_action(0, rng));
  EXPECT_NEAR(measured_bounds(p, samples).mu_f_hat, 0.0, 1e-12);
  EXPECT_THROW(measured_bounds(p, {}), DomainError);
}
