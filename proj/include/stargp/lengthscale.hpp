#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stargp/geometry.hpp"

namespace stargp {

/// Isotropic space-time Matern-1.5 GP used only to estimate the relative
/// scaling of space and time.
struct MaternGPParams {
  double lambda_s = 1.0;
  double lambda_t = 1.0;
  double amplitude = 1.0;
  double nugget = 0.1;
};

/// amplitude * (1 + sqrt3 r) exp(-sqrt3 r)
double matern15(double r, double amplitude = 1.0);

struct GpNll {
  double value = 0.0;
  /// d nll / d log(lambda_s, lambda_t, amplitude, nugget)
  Eigen::Vector4d grad = Eigen::Vector4d::Zero();
  double jitter = 0.0;
};

/// Negative log-likelihood of replicates (rows of `responses`, columns aligned
/// with rows of `coords`) under a shared covariance
/// K = matern15(scaled distances) + nugget I. `coords` are standardized
/// (s_1..s_d, t) rows.
GpNll gp_nll(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& responses,
             const MaternGPParams& params, bool with_gradient = true);

struct LengthscaleConfig {
  Index n_points = 5000;      // locations sampled per repeat
  Index n_replicates = 5;     // replicates sampled per repeat
  Index epochs = 200;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;   // repeat index; estimate_scales sets it
  double learning_rate = 0.1;
  double decay = 0.99;        // per-epoch step-size multiplier
  double tolerance = 1e-7;    // relative nll change
};

struct ScaleFit {
  MaternGPParams params;
  std::vector<double> trace;  // nll per epoch
  bool collapsed = false;     // no resolvable correlation at the smallest gap
  std::vector<Index> location_subset;
  std::vector<Index> replicate_subset;
};

/// One subsample-and-optimize pass. `coords` must be standardized and
/// `responses` is n x N.
ScaleFit fit_scales_once(const CoordinateSet& coords,
                         const Eigen::MatrixXd& responses,
                         const LengthscaleConfig& config);

struct ScaleEstimate {
  ScalingParams scaling{1.0, 1.0};
  std::vector<ScaleFit> repeats;
  double se_lambda_s = 0.0;
  double se_lambda_t = 0.0;
  std::vector<std::string> warnings;
};

/// Averages `repeats` independent fits (distinct RNG streams of one seed).
/// Failed repeats are dropped with a warning; if all fail the first error is
/// rethrown.
ScaleEstimate estimate_scales(const CoordinateSet& coords,
                              const Eigen::MatrixXd& responses,
                              const LengthscaleConfig& config, int repeats,
                              int threads = 1);

}  // namespace stargp
