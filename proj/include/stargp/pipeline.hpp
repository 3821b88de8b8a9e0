#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "stargp/inference.hpp"
#include "stargp/lengthscale.hpp"

namespace stargp {

/// Length-scale stage on raw inputs: standardize coordinates and responses,
/// then average repeated subset fits.
ScaleEstimate estimate_scales_raw(const Eigen::MatrixXd& raw_coords, const Eigen::MatrixXd& raw_y,
                                  const LengthscaleConfig& config, int repeats, int threads = 1);

/// Standardized coordinates divided by the length scales, with duplicate
/// rows rejected.
Eigen::MatrixXd scaled_coordinates(const Eigen::MatrixXd& raw_coords, const ScalingParams& scaling);

struct FitOptions {
  OrderingKind ordering = OrderingKind::kMaximin;
  Index m = 30;
  /// When non-empty, m is chosen from this grid on held-out replicates.
  std::vector<Index> m_grid;
  double validation_fraction = 0.2;
  double g = 1.0;
  FitConfig fit;
};

struct FitOutcome {
  FittedMap map;
  ThetaFit fit;
  std::optional<SelectMResult> selection;
};

/// Order, fit theta and build the posterior caches on raw inputs.
FitOutcome fit_model(const Eigen::MatrixXd& raw_coords, const Eigen::MatrixXd& raw_y,
                     const ScalingParams& scaling, const FitOptions& options);

}  // namespace stargp
