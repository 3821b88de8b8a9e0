#include <fmt/format.h>

#include "stargp/error.hpp"
#include "stargp/inference.hpp"
#include "stargp/sampling.hpp"

namespace stargp {

SelectMResult select_m(const Eigen::MatrixXd& train, const Eigen::MatrixXd& validation,
                       const OrderingBuilder& builder, const std::vector<Index>& grid, double g,
                       const FitConfig& config) {
  if (grid.empty()) throw config_error("select_m: the m grid is empty");
  if (train.cols() != validation.cols()) {
    throw data_error("select_m: training and validation replicates have different widths");
  }
  SelectMResult result;
  result.grid = grid;
  // Inputs are already standardized, so the map carries identity stats and
  // the validation score is on the standardized scale for every m alike.
  ResponseStats identity;
  identity.mean = Eigen::VectorXd::Zero(train.cols());
  identity.sd = Eigen::VectorXd::Ones(train.cols());
  double best = std::numeric_limits<double>::infinity();
  for (const Index m : grid) {
    Ordering ordering = builder(m);
    const Eigen::MatrixXd ordered = align_to_ordering(train, ordering.perm);
    const ThetaFit fit = fit_theta(ordered, ordering, g, config);
    const FittedMap map = build_fitted_map(ordered, std::move(ordering), fit.theta, g,
                                           ScalingParams(1.0, 1.0), identity, ColumnStats{},
                                           Eigen::MatrixXd(), config.threads);
    const double score = logscore(map, validation, config.threads).average;
    if (!std::isfinite(score)) {
      throw numerical_error(fmt::format("select_m: validation score for m = {} is not finite", m));
    }
    result.validation_score.push_back(score);
    if (score < best || (score == best && m < result.best_m)) {
      best = score;
      result.best_m = m;
    }
  }
  return result;
}

}  // namespace stargp
