#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stargp/geometry.hpp"
#include "stargp/ordering.hpp"
#include "stargp/priors.hpp"

namespace stargp {

/// Training replicates aligned to an ordering: column i holds position i of
/// every replicate (standardized scale).
Eigen::MatrixXd align_to_ordering(const Eigen::MatrixXd& replicates,
                                  const std::vector<Index>& perm);

/// n x |c(i)| matrix of conditioning-set values for position i.
Eigen::MatrixXd neighbor_matrix(const Eigen::MatrixXd& ordered, const Ordering& ordering,
                                Index i);

enum class GradientMethod { kAnalytic, kForwardDifference };

struct TermValue {
  double value = 0.0;
  ThetaVector grad = ThetaVector::Zero();
};

/// Log marginal density of column i given its conditioning set, with the
/// per-index GP function and noise variance integrated out (includes the
/// (2 pi)^{-n/2} constant).
double loglik_term(Index i, const Eigen::MatrixXd& ordered, const Ordering& ordering,
                   const Hyperparams& theta, double g);

TermValue loglik_term_with_gradient(Index i, const Eigen::MatrixXd& ordered,
                                    const Ordering& ordering, const Hyperparams& theta,
                                    double g,
                                    GradientMethod method = GradientMethod::kAnalytic);

/// Sum of loglik_term over all positions, reduced in ascending order.
double integrated_loglik(const Eigen::MatrixXd& ordered, const Ordering& ordering,
                         const Hyperparams& theta, double g, int threads = 1);

/// Default starting point: theta_d1 = log var of the first ordered column,
/// theta_s1 = theta_d1 - 2, everything else 0.
Hyperparams initial_theta(const Eigen::MatrixXd& ordered);

struct FitConfig {
  Index epochs = 30;
  Index batch_size = 1024;
  /// The epoch count is raised until at least this many optimizer steps run.
  Index min_steps = 300;
  double step = 0.05;
  std::uint64_t seed = 0;
  std::optional<Hyperparams> init;
  /// Components listed here stay at their initial value.
  std::array<bool, Hyperparams::kCount> fixed{};
  GradientMethod gradient = GradientMethod::kAnalytic;
  int threads = 1;
};

struct FitTrace {
  std::vector<double> objective;  // full-data objective after each epoch (entry 0 = init)
  std::vector<double> step_size;
};

struct ThetaFit {
  Hyperparams theta;
  FitTrace trace;
};

/// Mini-batch Adam ascent on integrated_loglik. Returns the best iterate seen.
ThetaFit fit_theta(const Eigen::MatrixXd& ordered, const Ordering& ordering, double g,
                   const FitConfig& config);

/// Posterior quantities for one position.
struct TermCache {
  Eigen::MatrixXd chol;    // lower Cholesky factor of G_i
  Eigen::VectorXd solved;  // G_i^{-1} y_i
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_tilde = 0.0;
  double beta_tilde = 0.0;
};

/// Everything needed to evaluate predictive densities and draw samples.
struct FittedMap {
  Hyperparams theta;
  double g = 1.0;
  Ordering ordering;
  ScalingParams scaling{1.0, 1.0};
  ResponseStats response_stats;
  ColumnStats coord_stats;
  Eigen::MatrixXd raw_coords;  // N x (d+1), original index order
  Eigen::MatrixXd train;       // n x N standardized, ordering-aligned
  std::vector<TermCache> caches;

  Index size() const { return train.cols(); }
  Index replicates() const { return train.rows(); }
  Index m() const { return ordering.m; }

  /// Prior for position i under the fitted theta.
  PriorSpec prior(Index i) const;
};

FittedMap build_fitted_map(Eigen::MatrixXd train_ordered, Ordering ordering,
                           const Hyperparams& theta, double g, const ScalingParams& scaling,
                           ResponseStats response_stats, ColumnStats coord_stats,
                           Eigen::MatrixXd raw_coords, int threads = 1);

/// Result of neighbor-count selection.
struct SelectMResult {
  Index best_m = 0;
  std::vector<Index> grid;
  std::vector<double> validation_score;  // average log-score per replicate, lower is better
};

using OrderingBuilder = std::function<Ordering(Index m)>;

/// Refits theta for every m in the grid and keeps the one with the best
/// validation log-score (smallest m on ties). Both response matrices are
/// standardized and in original index order.
SelectMResult select_m(const Eigen::MatrixXd& train, const Eigen::MatrixXd& validation,
                       const OrderingBuilder& builder, const std::vector<Index>& grid,
                       double g, const FitConfig& config);

}  // namespace stargp
