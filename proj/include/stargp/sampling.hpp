#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "stargp/inference.hpp"

namespace stargp {

/// Location-scale Student-t predictive for one position.
struct PredictiveParams {
  double nu = 0.0;
  double mu = 0.0;
  double scale2 = 0.0;
};

/// Predictive for position i given the values of its conditioning set
/// (standardized scale, in conditioning-set order).
PredictiveParams predictive_params(const FittedMap& map, Index i,
                                   const Eigen::Ref<const Eigen::VectorXd>& neighbor_values);

double t_logpdf(double y, const PredictiveParams& p);

/// mu + sqrt(scale2) * Z / sqrt(C / nu) with Z standard normal, C ~ chi^2_nu.
double t_sample(const PredictiveParams& p, std::mt19937_64& rng);

/// n_samples x N matrix on the raw scale, columns in original index order.
/// Sample s uses its own stream, so results do not depend on `threads`.
Eigen::MatrixXd sample_unconditional(const FittedMap& map, Index n_samples, std::uint64_t seed,
                                     int threads = 1);

/// Number of leading positions with raw time <= cutoff. Throws unless the map
/// is time-ordered and the cutoff falls on a frame boundary (a cutoff before
/// the first frame gives 0).
Index observed_count_for_cutoff(const FittedMap& map, double cutoff);

/// Forecast the positions after the first n_observed of a time-ordered map.
/// `observed` is a raw-scale trajectory in original index order; only the
/// entries at the first n_observed ordered positions are read. Returns
/// n_samples x N in original index order with the observed entries copied.
/// With n_observed = 0 the output equals sample_unconditional for the same seed.
Eigen::MatrixXd forecast(const FittedMap& map, const Eigen::VectorXd& observed, Index n_observed,
                         Index n_samples, std::uint64_t seed, int threads = 1);

struct LogScore {
  double average = 0.0;  // mean over replicates of the negative log density
  std::vector<double> per_replicate;
};

/// Negative log predictive density of raw-scale test replicates (rows, original
/// index order), including the Jacobian of the response standardization.
LogScore logscore(const FittedMap& map, const Eigen::MatrixXd& test, int threads = 1);

}  // namespace stargp
