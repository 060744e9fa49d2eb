#include "npghm/natural_gradient.hpp"

#include <algorithm>
#include <cmath>

namespace npghm {

std::string to_string(SubproblemKind kind) {
  switch (kind) {
    case SubproblemKind::kSgdAverage: return "sgd";
    case SubproblemKind::kAdam: return "adam";
    case SubproblemKind::kExact: return "exact";
  }
  return "unknown";
}

SubproblemKind parse_subproblem_kind(const std::string& name) {
  if (name == "sgd" || name == "sgd_average") return SubproblemKind::kSgdAverage;
  if (name == "adam") return SubproblemKind::kAdam;
  if (name == "exact") return SubproblemKind::kExact;
  throw ConfigError("unknown sub-problem solver '" + name + "'");
}

Vec npg_sgd(const ScoreSampler& sampler, const Vec& u, int iterations, double eta, const Vec& w0,
            Rng& rng) {
  require_dim(w0.size(), u.size(), "npg_sgd w0");
  if (iterations < 0) throw ConfigError("npg_sgd: iteration count must be nonnegative");
  if (!(eta > 0.0)) throw ConfigError("npg_sgd: step size must be positive");
  Vec w = w0;
  Vec sum = w0;
  for (int k = 0; k < iterations; ++k) {
    const Vec x = sampler(rng);
    require_dim(x.size(), u.size(), "npg_sgd score");
    w -= eta * (x.dot(w) * x - u);
    sum += w;
  }
  return sum / static_cast<double>(iterations + 1);
}

Vec adam_subsolver(const ScoreSampler& sampler, const Vec& u, int iterations,
                   const AdamParams& params, const Vec& w0, Rng& rng) {
  require_dim(w0.size(), u.size(), "adam_subsolver w0");
  if (iterations < 0) throw ConfigError("adam_subsolver: iteration count must be nonnegative");
  if (!(params.lr > 0.0)) throw ConfigError("adam_subsolver: learning rate must be positive");
  Vec w = w0;
  Vec m = Vec::Zero(u.size());
  Vec v = Vec::Zero(u.size());
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const Vec x = sampler(rng);
    require_dim(x.size(), u.size(), "adam_subsolver score");
    const Vec grad = x.dot(w) * x - u;
    m = params.beta1 * m + (1.0 - params.beta1) * grad;
    v = params.beta2 * v + (1.0 - params.beta2) * grad.cwiseAbs2();
    beta1_pow *= params.beta1;
    beta2_pow *= params.beta2;
    const Vec m_hat = m / (1.0 - beta1_pow);
    const Vec v_hat = v / (1.0 - beta2_pow);
    w.array() -= params.lr * m_hat.array() / (v_hat.array().sqrt() + params.epsilon);
  }
  return w;
}

Vec exact_npg_direction(const Mat& fim, const Vec& u, double damping) {
  require_dim(fim.rows(), fim.cols(), "exact_npg_direction: FIM must be square");
  require_dim(u.size(), fim.rows(), "exact_npg_direction u");
  if (!(damping >= 0.0)) throw DomainError("exact_npg_direction: damping must be nonnegative");
  const double scale = std::max(1.0, fim.cwiseAbs().maxCoeff());
  if ((fim - fim.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("exact_npg_direction: FIM is not symmetric");
  }
  if (damping > 0.0) {
    Mat damped = fim;
    damped.diagonal().array() += damping;
    return damped.ldlt().solve(u);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(fim);
  const Vec& values = eig.eigenvalues();
  const double norm = values.cwiseAbs().maxCoeff();
  const double cutoff = 1e-10 * norm;
  Vec coeffs = eig.eigenvectors().transpose() * u;
  for (Index i = 0; i < values.size(); ++i) {
    coeffs[i] = (values[i] > cutoff && norm > 0.0) ? coeffs[i] / values[i] : 0.0;
  }
  return eig.eigenvectors() * coeffs;
}

Mat estimate_fim(const ScoreSampler& sampler, Index dim, int n_samples, Rng& rng) {
  if (n_samples < 1) throw ConfigError("estimate_fim: need at least one sample");
  Mat fim = Mat::Zero(dim, dim);
  for (int i = 0; i < n_samples; ++i) {
    const Vec x = sampler(rng);
    require_dim(x.size(), dim, "estimate_fim score");
    fim.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  fim = fim.selfadjointView<Eigen::Lower>();
  return fim / static_cast<double>(n_samples);
}

double recommended_iterations(double kappa, Index dim) {
  const double root = std::sqrt(2.0 * static_cast<double>(dim)) + 1.0;
  return std::ceil(48.0 * std::pow(kappa, 4) * root * root);
}

double default_eta(double declared_mg, std::optional<double> measured_mg) {
  const double mg = std::max(declared_mg, measured_mg.value_or(0.0));
  if (!(mg > 0.0) || std::isinf(mg)) {
    throw ConfigError("default_eta: need a finite positive M_g (set subproblem.eta explicitly)");
  }
  return 1.0 / (4.0 * mg);
}

}  // namespace npghm
