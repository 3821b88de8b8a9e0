#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "stargp/correlation.hpp"

namespace stargp {

using Eigen::Index;

/// Space-time Matern covariance on coordinates (rows = points, time last):
/// variance * rho(r) + nugget * I with r the two-term scaled distance.
Eigen::MatrixXd matern_covariance(const Eigen::MatrixXd& coords, double lambda_s,
                                  double lambda_t, MaternSmoothness nu, double variance,
                                  double nugget);

struct SimulationConfig {
  double lambda_s = 0.5;
  double lambda_t = 0.25;
  MaternSmoothness nu = MaternSmoothness::kHalf;
  double variance = 1.0;
  double nugget = 1e-4;
  Index replicates = 10;
  std::uint64_t seed = 0;
  /// Apply y -> exp(y) pointwise after drawing the Gaussian field.
  bool exp_warp = false;
};

/// n x N replicates drawn iid from N(0, Sigma) via Cholesky; replicate r uses
/// its own random stream.
Eigen::MatrixXd simulate_matern_gp(const Eigen::MatrixXd& coords, const SimulationConfig& config);

/// Regular nx x ny grid on [0,1]^2 repeated over `frames` equally spaced times
/// in [0,1]; rows ordered frame-major.
Eigen::MatrixXd grid_coords(Index nx, Index ny, Index frames);

struct GaussianScore {
  double average = 0.0;
  std::vector<double> per_replicate;
};

/// Negative log density of each row of `test` under N(mean, sigma).
GaussianScore exact_gaussian_logscore(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& test,
                                      const Eigen::VectorXd& mean = Eigen::VectorXd());

struct GaussianConditional {
  std::vector<Index> free;  // indices not observed, ascending
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GaussianConditional exact_gaussian_conditional(const Eigen::MatrixXd& sigma,
                                               const std::vector<Index>& observed,
                                               const Eigen::VectorXd& values);

/// log of the integral over d^2 of N(y | 0, d^2 G) IG(d^2 | alpha, beta),
/// evaluated by adaptive Gauss-Kronrod quadrature on log d^2.
double nig_marginal_quadrature(const Eigen::VectorXd& y, const Eigen::MatrixXd& g, double alpha,
                               double beta);

/// Weight-space Bayesian linear regression marginal:
/// y | b, d^2 ~ N(A b, d^2 R), b | d^2 ~ N(0, d^2 diag(weight_var)),
/// d^2 ~ IG(alpha, beta). Uses the matrix determinant lemma and Woodbury
/// identity with whitened weights.
double blr_log_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                        const Eigen::VectorXd& weight_var, const Eigen::MatrixXd& residual_cov,
                        double alpha, double beta);

}  // namespace stargp
