#include "stargp/geometry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "stargp/error.hpp"

namespace stargp {

namespace {

double population_sd(const Eigen::Ref<const Eigen::VectorXd>& column,
                     double mean) {
  const double ss = (column.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(column.size()));
}

}  // namespace

Cartesian lonlat_to_cartesian(double lon_deg, double lat_deg) {
  if (!std::isfinite(lon_deg) || !std::isfinite(lat_deg)) {
    throw data_error("invalid coordinate: non-finite longitude/latitude");
  }
  if (lat_deg < -90.0 || lat_deg > 90.0) {
    throw data_error(fmt::format("invalid coordinate: latitude {} outside [-90, 90]",
                                 lat_deg));
  }
  double lon = std::fmod(lon_deg, 360.0);
  if (lon < 0.0) lon += 360.0;
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double lam = lon * kDeg;
  const double phi = lat_deg * kDeg;
  return {std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam),
          std::sin(phi)};
}

CoordinateSet CoordinateSet::from_matrix(Eigen::MatrixXd values) {
  if (values.cols() < 2) {
    throw data_error("coordinates need at least one spatial column and a time column");
  }
  if (values.rows() < 2) {
    throw data_error("coordinates need at least two rows");
  }
  if (!values.allFinite()) {
    throw data_error("coordinates contain non-finite entries");
  }
  CoordinateSet out;
  out.values_ = std::move(values);
  return out;
}

CoordinateSet standardize_coords(const CoordinateSet& raw) {
  const Index n = raw.size();
  const Index cols = raw.values().cols();
  const Index time_col = cols - 1;
  ColumnStats stats{Eigen::VectorXd(cols), Eigen::VectorXd(cols)};
  CoordinateSet out;
  out.values_.resize(n, cols);
  for (Index c = 0; c < cols; ++c) {
    const auto column = raw.values().col(c);
    const double mean = column.mean();
    double sd = population_sd(column, mean);
    if (sd == 0.0) {
      if (c != time_col) {
        throw data_error(fmt::format(
            "degenerate dimension: spatial column {} has zero variance", c + 1));
      }
      out.time_constant_ = true;
      sd = 1.0;
    }
    stats.mean[c] = mean;
    stats.sd[c] = sd;
    out.values_.col(c) = (column.array() - mean) / sd;
  }
  out.stats_ = std::move(stats);
  return out;
}

Eigen::MatrixXd apply_coord_stats(const Eigen::MatrixXd& raw,
                                  const ColumnStats& stats) {
  if (raw.cols() != stats.mean.size()) {
    throw data_error("coordinate column count does not match stored stats");
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Index c = 0; c < raw.cols(); ++c) {
    out.col(c) = (raw.col(c).array() - stats.mean[c]) / stats.sd[c];
  }
  return out;
}

ScalingParams::ScalingParams(double lambda_s, double lambda_t)
    : lambda_s_(lambda_s), lambda_t_(lambda_t) {
  if (!(lambda_s > 0.0) || !(lambda_t > 0.0) || !std::isfinite(lambda_s) ||
      !std::isfinite(lambda_t)) {
    throw config_error(fmt::format(
        "scaling parameters must be positive and finite (lambda_s={}, lambda_t={})",
        lambda_s, lambda_t));
  }
  eta_ = (lambda_s * lambda_s) / (lambda_t * lambda_t);
}

Eigen::MatrixXd scale_coords(const CoordinateSet& coords,
                             const ScalingParams& scaling) {
  if (!coords.standardized()) {
    throw config_error("scale_coords requires standardized coordinates");
  }
  Eigen::MatrixXd out = coords.values();
  const Index time_col = out.cols() - 1;
  out.leftCols(time_col) /= scaling.lambda_s();
  out.col(time_col) /= scaling.lambda_t();
  return out;
}

void reject_duplicate_rows(const Eigen::MatrixXd& scaled) {
  const Index n = scaled.rows();
  const Index d = scaled.cols();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto row_less = [&](Index a, Index b) {
    for (Index k = 0; k < d; ++k) {
      if (scaled(a, k) != scaled(b, k)) return scaled(a, k) < scaled(b, k);
    }
    return a < b;
  };
  std::sort(idx.begin(), idx.end(), row_less);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if ((scaled.row(idx[k]).array() == scaled.row(idx[k - 1]).array()).all()) {
      const Index a = std::min(idx[k], idx[k - 1]);
      const Index b = std::max(idx[k], idx[k - 1]);
      throw data_error(fmt::format(
          "duplicate scaled coordinates at rows {} and {}", a + 1, b + 1));
    }
  }
}

double scaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    throw data_error("scaled_distance: dimension mismatch");
  }
  return std::sqrt(squared_distance(a.data(), b.data(), a.size()));
}

double scaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b,
                       const ScalingParams& scaling) {
  if (a.size() != b.size() || a.size() < 2) {
    throw data_error("scaled_distance: dimension mismatch");
  }
  const Index d = a.size() - 1;
  const double ds2 = (a.head(d) - b.head(d)).squaredNorm();
  const double dt = a[d] - b[d];
  const double ls = scaling.lambda_s();
  const double lt = scaling.lambda_t();
  return std::sqrt(ds2 / (ls * ls) + dt * dt / (lt * lt));
}

double scaled_distance_eta_form(const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b,
                                const ScalingParams& scaling) {
  if (a.size() != b.size() || a.size() < 2) {
    throw data_error("scaled_distance: dimension mismatch");
  }
  const Index d = a.size() - 1;
  const double ds2 = (a.head(d) - b.head(d)).squaredNorm();
  const double dt = a[d] - b[d];
  const double ls = scaling.lambda_s();
  return std::sqrt((ds2 + scaling.eta() * dt * dt) / (ls * ls));
}

ResponseStats response_stats(const Eigen::MatrixXd& replicates) {
  if (replicates.rows() < 2) {
    throw data_error("response standardization needs at least two replicates");
  }
  if (!replicates.allFinite()) {
    throw data_error("responses contain non-finite entries");
  }
  const Index cols = replicates.cols();
  ResponseStats stats{Eigen::VectorXd(cols), Eigen::VectorXd(cols), {}};
  for (Index c = 0; c < cols; ++c) {
    const double mean = replicates.col(c).mean();
    double sd = population_sd(replicates.col(c), mean);
    if (sd == 0.0) {
      stats.zero_variance.push_back(c);
      sd = 1.0;
    }
    stats.mean[c] = mean;
    stats.sd[c] = sd;
  }
  return stats;
}

Eigen::MatrixXd standardize_responses(const Eigen::MatrixXd& replicates,
                                      const ResponseStats& stats) {
  if (replicates.cols() != stats.mean.size()) {
    throw data_error(fmt::format("response columns ({}) do not match stats ({})",
                                 replicates.cols(), stats.mean.size()));
  }
  return (replicates.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.sd.transpose().array();
}

Eigen::MatrixXd destandardize_responses(const Eigen::MatrixXd& standardized,
                                        const ResponseStats& stats) {
  if (standardized.cols() != stats.mean.size()) {
    throw data_error("response columns do not match stats");
  }
  Eigen::MatrixXd out =
      standardized.array().rowwise() * stats.sd.transpose().array();
  out.rowwise() += stats.mean.transpose();
  return out;
}

}  // namespace stargp
