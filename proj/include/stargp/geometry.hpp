#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace stargp {

using Eigen::Index;

struct Cartesian {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Maps geographic degrees onto the unit sphere. Longitude is reduced mod 360
/// first; latitude must lie in [-90, 90].
Cartesian lonlat_to_cartesian(double lon_deg, double lat_deg);

/// Per-column affine transform x -> (x - mean) / sd.
struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// N space-time inputs stored row-wise as (s_1, ..., s_d, t); the time
/// coordinate is always the last column.
class CoordinateSet {
 public:
  /// Validates shape (N >= 2, d >= 1) and finiteness; the result is raw.
  static CoordinateSet from_matrix(Eigen::MatrixXd values);

  Index size() const { return values_.rows(); }
  Index spatial_dim() const { return values_.cols() - 1; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd times() const { return values_.col(values_.cols() - 1); }

  bool standardized() const { return stats_.has_value(); }
  const std::optional<ColumnStats>& stats() const { return stats_; }

  /// Set when the time column had zero variance at standardization.
  bool temporal_scale_unidentifiable() const { return time_constant_; }

 private:
  friend CoordinateSet standardize_coords(const CoordinateSet& raw);
  CoordinateSet() = default;

  Eigen::MatrixXd values_;
  std::optional<ColumnStats> stats_;
  bool time_constant_ = false;
};

/// Zero mean / unit population variance per column. A constant spatial column
/// is an error; a constant time column is centred only and flagged.
CoordinateSet standardize_coords(const CoordinateSet& raw);

/// Applies stored standardization stats to another raw coordinate matrix.
Eigen::MatrixXd apply_coord_stats(const Eigen::MatrixXd& raw,
                                  const ColumnStats& stats);

class ScalingParams {
 public:
  ScalingParams(double lambda_s, double lambda_t);

  double lambda_s() const { return lambda_s_; }
  double lambda_t() const { return lambda_t_; }
  double eta() const { return eta_; }

 private:
  double lambda_s_;
  double lambda_t_;
  double eta_;
};

/// Divides spatial columns by lambda_s and the time column by lambda_t.
/// Requires standardized coordinates.
Eigen::MatrixXd scale_coords(const CoordinateSet& coords,
                             const ScalingParams& scaling);

/// Throws a data error naming the first duplicated pair of rows.
void reject_duplicate_rows(const Eigen::MatrixXd& scaled);

inline double squared_distance(const double* a, const double* b, Index dim) {
  double acc = 0.0;
  for (Index k = 0; k < dim; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

/// Euclidean distance between two already-scaled points.
double scaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b);

/// Distance between two standardized (unscaled) points, two-term form:
/// |ds|^2 / lambda_s^2 + |dt|^2 / lambda_t^2.
double scaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b,
                       const ScalingParams& scaling);

/// Same metric in the eta form (|ds|^2 + eta |dt|^2) / lambda_s^2.
double scaled_distance_eta_form(const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b,
                                const ScalingParams& scaling);

/// Per-location response standardization. Locations with zero variance
/// across replicates get sd = 1 and are listed in `zero_variance`.
struct ResponseStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::vector<Index> zero_variance;
};

ResponseStats response_stats(const Eigen::MatrixXd& replicates);
Eigen::MatrixXd standardize_responses(const Eigen::MatrixXd& replicates,
                                      const ResponseStats& stats);
Eigen::MatrixXd destandardize_responses(const Eigen::MatrixXd& standardized,
                                        const ResponseStats& stats);

}  // namespace stargp
