#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

namespace stargp {

using Eigen::Index;

/// The six global transport-map hyperparameters. Any finite value is
/// admissible; positivity comes from exp transforms.
struct Hyperparams {
  double theta_d1 = 0.0;
  double theta_d2 = 0.0;
  double theta_s1 = 0.0;
  double theta_s2 = 0.0;
  double theta_q = 0.0;
  double theta_gamma = 0.0;

  static constexpr std::size_t kCount = 6;
  static const std::array<const char*, kCount>& names();

  Eigen::Matrix<double, 6, 1> as_vector() const;
  static Hyperparams from_vector(const Eigen::Matrix<double, 6, 1>& v);
};

using ThetaVector = Eigen::Matrix<double, 6, 1>;

/// Index positions within ThetaVector.
enum ThetaIndex : Index { kThetaD1 = 0, kThetaD2, kThetaS1, kThetaS2, kThetaQ, kThetaGamma };

/// exp(theta_d1 + exp(theta_d2) log l)
double expected_d2(double l, const Hyperparams& theta);

struct InverseGamma {
  double alpha;
  double beta;
};

/// Moment-matched inverse-Gamma with mean e_d2 and sd g * e_d2.
InverseGamma ig_params(double e_d2, double g);

/// q2[k-1] = exp(-k exp(theta_q)), k = 1..count.
Eigen::VectorXd q_diag(Index count, double theta_q);

/// exp(theta_s1 + exp(theta_s2) log l)
double sigma2(double l, const Hyperparams& theta);
double gamma_range(double theta_gamma);

/// Per-index prior objects.
struct PriorSpec {
  double alpha = 3.0;
  double beta = 2.0;
  Eigen::VectorXd q2;
  double sigma2 = 0.0;
  double gamma = 1.0;
  double e_d2 = 1.0;
};

PriorSpec make_prior(double l, Index neighbor_count, const Hyperparams& theta, double g);

/// E(d^2)^{-1} (a' Q b + sigma^2 rho(d_Q(a, b) / gamma)) with
/// d_Q(a, b) = |Q^{1/2}(a - b)| and rho the Matern-1.5 correlation.
/// An empty conditioning set gives the zero kernel.
double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b, const PriorSpec& prior);

/// G = K(A, A) + I for the n x |c| neighbor matrix A (rows = replicates).
Eigen::MatrixXd gram(const Eigen::MatrixXd& neighbors, const PriorSpec& prior);

/// Cross-kernel k[j] = K(query, A_j).
Eigen::VectorXd cross_kernel(const Eigen::Ref<const Eigen::VectorXd>& query,
                             const Eigen::MatrixXd& neighbors, const PriorSpec& prior);

const char* correlation_family_name();

}  // namespace stargp
