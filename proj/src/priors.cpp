#include "stargp/priors.hpp"

#include <fmt/format.h>

#include <cmath>

#include "stargp/correlation.hpp"
#include "stargp/error.hpp"

namespace stargp {

const std::array<const char*, Hyperparams::kCount>& Hyperparams::names() {
  static const std::array<const char*, kCount> kNames = {
      "theta_d1", "theta_d2", "theta_s1", "theta_s2", "theta_q", "theta_gamma"};
  return kNames;
}

ThetaVector Hyperparams::as_vector() const {
  ThetaVector v;
  v << theta_d1, theta_d2, theta_s1, theta_s2, theta_q, theta_gamma;
  return v;
}

Hyperparams Hyperparams::from_vector(const ThetaVector& v) {
  return {v[kThetaD1], v[kThetaD2], v[kThetaS1], v[kThetaS2], v[kThetaQ], v[kThetaGamma]};
}

double expected_d2(double l, const Hyperparams& theta) {
  if (!(l > 0.0)) {
    throw data_error(fmt::format("expected_d2: nearest-neighbor distance {} must be > 0", l));
  }
  return std::exp(theta.theta_d1 + std::exp(theta.theta_d2) * std::log(l));
}

InverseGamma ig_params(double e_d2, double g) {
  if (!(e_d2 > 0.0) || !(g > 0.0)) {
    throw config_error("ig_params: mean and g must be positive");
  }
  const double alpha = 2.0 + 1.0 / (g * g);
  return {alpha, e_d2 * (alpha - 1.0)};
}

Eigen::VectorXd q_diag(Index count, double theta_q) {
  if (count < 0) throw config_error("q_diag: negative count");
  const double rate = std::exp(theta_q);
  Eigen::VectorXd q2(count);
  for (Index k = 0; k < count; ++k) q2[k] = std::exp(-static_cast<double>(k + 1) * rate);
  return q2;
}

double sigma2(double l, const Hyperparams& theta) {
  if (!(l > 0.0)) {
    throw data_error(fmt::format("sigma2: nearest-neighbor distance {} must be > 0", l));
  }
  return std::exp(theta.theta_s1 + std::exp(theta.theta_s2) * std::log(l));
}

double gamma_range(double theta_gamma) { return std::exp(theta_gamma); }

PriorSpec make_prior(double l, Index neighbor_count, const Hyperparams& theta, double g) {
  PriorSpec p;
  p.e_d2 = expected_d2(l, theta);
  const InverseGamma ig = ig_params(p.e_d2, g);
  p.alpha = ig.alpha;
  p.beta = ig.beta;
  p.q2 = q_diag(neighbor_count, theta.theta_q);
  p.sigma2 = sigma2(l, theta);
  p.gamma = gamma_range(theta.theta_gamma);
  return p;
}

double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b, const PriorSpec& prior) {
  const Index p = prior.q2.size();
  if (a.size() != p || b.size() != p) {
    throw data_error(fmt::format("kernel_eval: vectors of length {} and {} for a set of size {}",
                                 a.size(), b.size(), p));
  }
  if (p == 0) return 0.0;
  double lin = 0.0;
  double dq2 = 0.0;
  for (Index k = 0; k < p; ++k) {
    lin += prior.q2[k] * a[k] * b[k];
    const double diff = a[k] - b[k];
    dq2 += prior.q2[k] * diff * diff;
  }
  const double rho = matern15_correlation(std::sqrt(dq2) / prior.gamma);
  return (lin + prior.sigma2 * rho) / prior.e_d2;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& neighbors, const PriorSpec& prior) {
  const Index n = neighbors.rows();
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
  if (prior.q2.size() == 0) return g;
  for (Index j = 0; j < n; ++j) {
    for (Index k = j; k < n; ++k) {
      const double v = kernel_eval(neighbors.row(j).transpose(), neighbors.row(k).transpose(), prior);
      g(j, k) += v;
      if (k != j) g(k, j) = g(j, k);
    }
  }
  return g;
}

Eigen::VectorXd cross_kernel(const Eigen::Ref<const Eigen::VectorXd>& query,
                             const Eigen::MatrixXd& neighbors, const PriorSpec& prior) {
  Eigen::VectorXd k(neighbors.rows());
  for (Index j = 0; j < neighbors.rows(); ++j) {
    k[j] = kernel_eval(query, neighbors.row(j).transpose(), prior);
  }
  return k;
}

const char* correlation_family_name() { return "matern1.5"; }

}  // namespace stargp
