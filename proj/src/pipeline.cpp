#include "stargp/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "stargp/error.hpp"

namespace stargp {

ScaleEstimate estimate_scales_raw(const Eigen::MatrixXd& raw_coords, const Eigen::MatrixXd& raw_y,
                                  const LengthscaleConfig& config, int repeats, int threads) {
  const CoordinateSet coords = standardize_coords(CoordinateSet::from_matrix(raw_coords));
  const Eigen::MatrixXd y = standardize_responses(raw_y, response_stats(raw_y));
  return estimate_scales(coords, y, config, repeats, threads);
}

Eigen::MatrixXd scaled_coordinates(const Eigen::MatrixXd& raw_coords,
                                   const ScalingParams& scaling) {
  const CoordinateSet coords = standardize_coords(CoordinateSet::from_matrix(raw_coords));
  Eigen::MatrixXd scaled = scale_coords(coords, scaling);
  reject_duplicate_rows(scaled);
  return scaled;
}

FitOutcome fit_model(const Eigen::MatrixXd& raw_coords, const Eigen::MatrixXd& raw_y,
                     const ScalingParams& scaling, const FitOptions& options) {
  if (raw_y.cols() != raw_coords.rows()) {
    throw data_error(fmt::format("ensembles have {} columns but coordinates have {} rows",
                                 raw_y.cols(), raw_coords.rows()));
  }
  if (!raw_y.allFinite()) throw data_error("ensembles contain non-finite values");
  const CoordinateSet coords = standardize_coords(CoordinateSet::from_matrix(raw_coords));
  Eigen::MatrixXd scaled = scale_coords(coords, scaling);
  reject_duplicate_rows(scaled);

  FitOutcome outcome;
  Index m = options.m;
  if (!options.m_grid.empty()) {
    const Index n = raw_y.rows();
    const auto n_val = static_cast<Index>(
        std::ceil(options.validation_fraction * static_cast<double>(n)));
    if (n_val < 1 || n - n_val < 2) {
      throw config_error("m selection needs at least 2 training and 1 validation replicate");
    }
    const Eigen::MatrixXd train_raw = raw_y.topRows(n - n_val);
    const ResponseStats stats = response_stats(train_raw);
    const Eigen::MatrixXd train = standardize_responses(train_raw, stats);
    const Eigen::MatrixXd val = standardize_responses(raw_y.bottomRows(n_val), stats);
    const Index m_max = *std::max_element(options.m_grid.begin(), options.m_grid.end());
    const Ordering base = build_ordering(scaled, options.ordering, m_max);
    auto builder = [&](Index k) { return with_neighbor_count(base, scaled, k); };
    outcome.selection = select_m(train, val, builder, options.m_grid, options.g, options.fit);
    m = outcome.selection->best_m;
  }

  const ResponseStats stats = response_stats(raw_y);
  Ordering ordering = build_ordering(scaled, options.ordering, m);
  const Eigen::MatrixXd ordered =
      align_to_ordering(standardize_responses(raw_y, stats), ordering.perm);
  outcome.fit = fit_theta(ordered, ordering, options.g, options.fit);
  outcome.map = build_fitted_map(ordered, std::move(ordering), outcome.fit.theta, options.g,
                                 scaling, stats, *coords.stats(), raw_coords, options.fit.threads);
  return outcome;
}

}  // namespace stargp
