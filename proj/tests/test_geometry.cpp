#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "stargp/error.hpp"
#include "stargp/geometry.hpp"

namespace stargp {
namespace {

constexpr double kPi = 3.14159265358979323846;

TEST(LonLat, AxisAndPoleCases) {
  const Cartesian a = lonlat_to_cartesian(0.0, 0.0);
  EXPECT_NEAR(a.x, 1.0, 1e-15);
  EXPECT_NEAR(a.y, 0.0, 1e-15);
  EXPECT_NEAR(a.z, 0.0, 1e-15);
  const Cartesian b = lonlat_to_cartesian(90.0, 0.0);
  EXPECT_NEAR(b.x, 0.0, 1e-15);
  EXPECT_NEAR(b.y, 1.0, 1e-15);
  EXPECT_NEAR(b.z, 0.0, 1e-15);
  const Cartesian c = lonlat_to_cartesian(0.0, 90.0);
  EXPECT_NEAR(c.x, 0.0, 1e-15);
  EXPECT_NEAR(c.y, 0.0, 1e-15);
  EXPECT_NEAR(c.z, 1.0, 1e-15);
}

TEST(LonLat, UnitNormAndWrapping) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lon(-1000.0, 1000.0), lat(-90.0, 90.0);
  for (int k = 0; k < 200; ++k) {
    const double lo = lon(rng), la = lat(rng);
    const Cartesian p = lonlat_to_cartesian(lo, la);
    EXPECT_NEAR(p.x * p.x + p.y * p.y + p.z * p.z, 1.0, 1e-12);
    const Cartesian q = lonlat_to_cartesian(lo + 360.0, la);
    EXPECT_NEAR(p.x, q.x, 1e-12);
    EXPECT_NEAR(p.y, q.y, 1e-12);
    EXPECT_NEAR(p.z, q.z, 1e-12);
  }
}

TEST(LonLat, RejectsInvalidInput) {
  EXPECT_THROW(lonlat_to_cartesian(std::numeric_limits<double>::quiet_NaN(), 0.0), Error);
  EXPECT_THROW(lonlat_to_cartesian(0.0, std::numeric_limits<double>::infinity()), Error);
  EXPECT_THROW(lonlat_to_cartesian(0.0, 91.0), Error);
}

TEST(LonLat, ChordNearestNeighborMatchesCentralAngle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lon(0.0, 360.0), z(-1.0, 1.0);
  const int n = 150;
  std::vector<Cartesian> pts;
  for (int k = 0; k < n; ++k) {
    pts.push_back(lonlat_to_cartesian(lon(rng), std::asin(z(rng)) * 180.0 / kPi));
  }
  auto dot = [&](int a, int b) {
    return pts[a].x * pts[b].x + pts[a].y * pts[b].y + pts[a].z * pts[b].z;
  };
  for (int a = 0; a < n; ++a) {
    int best_chord = -1, best_angle = -1;
    double chord = 1e300, angle = 1e300;
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      const double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y, dz = pts[a].z - pts[b].z;
      const double c = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double g = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
      if (c < chord) chord = c, best_chord = b;
      if (g < angle) angle = g, best_angle = b;
    }
    EXPECT_EQ(best_chord, best_angle);
  }
}

TEST(StandardizeCoords, TwoPointPopulationConvention) {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 10.0, 3.0, 14.0;
  const CoordinateSet s = standardize_coords(CoordinateSet::from_matrix(x));
  EXPECT_NEAR(s.values()(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(s.values()(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(s.stats()->mean[0], 2.0, 1e-15);
  EXPECT_NEAR(s.stats()->sd[0], 1.0, 1e-15);
  EXPECT_NEAR(s.stats()->sd[1], 2.0, 1e-15);
}

TEST(StandardizeCoords, IdempotentAndInvertible) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(5.0, 3.0);
  Eigen::MatrixXd x(30, 3);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) x(i, j) = z(rng);
  const CoordinateSet once = standardize_coords(CoordinateSet::from_matrix(x));
  const CoordinateSet twice = standardize_coords(CoordinateSet::from_matrix(once.values()));
  EXPECT_LT((once.values() - twice.values()).cwiseAbs().maxCoeff(), 1e-12);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(once.values().col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(once.values().col(j).squaredNorm() / 30.0, 1.0, 1e-12);
  }
  const Eigen::MatrixXd again = apply_coord_stats(x, *once.stats());
  EXPECT_LT((again - once.values()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StandardizeCoords, ConstantSpatialColumnIsError) {
  Eigen::MatrixXd x(3, 2);
  x << 1.0, 0.0, 1.0, 1.0, 1.0, 2.0;
  EXPECT_THROW(standardize_coords(CoordinateSet::from_matrix(x)), Error);
}

TEST(StandardizeCoords, ConstantTimeColumnIsFlagged) {
  Eigen::MatrixXd x(3, 2);
  x << 0.0, 4.0, 1.0, 4.0, 2.0, 4.0;
  const CoordinateSet s = standardize_coords(CoordinateSet::from_matrix(x));
  EXPECT_TRUE(s.temporal_scale_unidentifiable());
  EXPECT_NEAR(s.values()(0, 1), 0.0, 1e-15);
}

TEST(ScaleCoords, ArithmeticIdentityAndHomogeneity) {
  Eigen::MatrixXd x(2, 2);
  x << -2.0, -3.0, 2.0, 3.0;
  const CoordinateSet s = standardize_coords(CoordinateSet::from_matrix(x));
  const Eigen::MatrixXd id = scale_coords(s, ScalingParams(1.0, 1.0));
  EXPECT_LT((id - s.values()).cwiseAbs().maxCoeff(), 1e-15);

  Eigen::MatrixXd raw(2, 2);
  raw << 0.0, 0.0, 4.0, 6.0;
  const CoordinateSet t = standardize_coords(CoordinateSet::from_matrix(raw));
  const Eigen::MatrixXd one = scale_coords(t, ScalingParams(1.0, 1.0));
  const Eigen::MatrixXd two = scale_coords(t, ScalingParams(2.0, 2.0));
  EXPECT_LT((one - 2.0 * two).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ScaleCoords, PointDividedByScales) {
  Eigen::MatrixXd x(2, 2);
  x << 2.0, 3.0, -2.0, -3.0;
  const CoordinateSet s = standardize_coords(CoordinateSet::from_matrix(x));
  const Eigen::MatrixXd scaled = scale_coords(s, ScalingParams(2.0, 3.0));
  EXPECT_NEAR(scaled(0, 0), s.values()(0, 0) / 2.0, 1e-15);
  EXPECT_NEAR(scaled(0, 1), s.values()(0, 1) / 3.0, 1e-15);
  // The point (s=2, t=3) under scales (2, 3) sits at (1, 1).
  const Eigen::Vector2d p(2.0, 3.0), o(0.0, 0.0), unit(1.0, 1.0);
  EXPECT_NEAR(scaled_distance(p, o, ScalingParams(2.0, 3.0)), scaled_distance(unit, o), 1e-15);
}

TEST(ScaleCoords, RejectsNonPositiveScalesAndRawInput) {
  EXPECT_THROW(ScalingParams(0.0, 1.0), Error);
  EXPECT_THROW(ScalingParams(1.0, -1.0), Error);
  Eigen::MatrixXd x(2, 2);
  x << 0.0, 0.0, 1.0, 1.0;
  EXPECT_THROW(scale_coords(CoordinateSet::from_matrix(x), ScalingParams(1.0, 1.0)), Error);
}

TEST(ScalingParams, EtaIsRatioOfSquares) {
  const ScalingParams p(0.5, 0.25);
  EXPECT_EQ(p.eta(), (0.5 * 0.5) / (0.25 * 0.25));
}

TEST(ScaledDistance, ThreeFourFive) {
  Eigen::Vector3d a(0.0, 0.0, 0.0), b(3.0, 0.0, 4.0);
  EXPECT_DOUBLE_EQ(scaled_distance(a, b, ScalingParams(1.0, 1.0)), 5.0);
  EXPECT_DOUBLE_EQ(scaled_distance(a, a, ScalingParams(1.0, 1.0)), 0.0);
}

TEST(ScaledDistance, EtaFormAgreesAndIsMetric) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int k = 0; k < 200; ++k) {
    const ScalingParams sp(u(rng), u(rng));
    Eigen::Vector4d a, b, c;
    for (int j = 0; j < 4; ++j) a[j] = z(rng), b[j] = z(rng), c[j] = z(rng);
    const double ab = scaled_distance(a, b, sp);
    EXPECT_NEAR(ab, scaled_distance_eta_form(a, b, sp), 1e-12 * std::max(1.0, ab));
    EXPECT_DOUBLE_EQ(ab, scaled_distance(b, a, sp));
    EXPECT_LE(ab, scaled_distance(a, c, sp) + scaled_distance(c, b, sp) + 1e-12);
    EXPECT_GT(ab, 0.0);
  }
}

TEST(ScaledDistance, CommonFactorScalesInversely) {
  Eigen::Vector3d a(0.3, -1.0, 2.0), b(1.0, 0.5, -0.5);
  const double base = scaled_distance(a, b, ScalingParams(0.7, 1.3));
  EXPECT_NEAR(scaled_distance(a, b, ScalingParams(1.4, 2.6)), base / 2.0, 1e-15);
}

TEST(Duplicates, RejectedWithPairNamed) {
  Eigen::MatrixXd x(3, 2);
  x << 0.0, 0.0, 1.0, 1.0, 0.0, 0.0;
  try {
    reject_duplicate_rows(x);
    FAIL() << "expected a data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
  x(2, 0) = 2.0;
  EXPECT_NO_THROW(reject_duplicate_rows(x));
}

TEST(StandardizeResponses, TwoReplicateColumnAndRoundTrip) {
  Eigen::MatrixXd y(2, 2);
  y << 1.0, 5.0, 3.0, -1.0;
  const ResponseStats st = response_stats(y);
  const Eigen::MatrixXd z = standardize_responses(y, st);
  EXPECT_NEAR(z(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(z(1, 0), 1.0, 1e-15);
  EXPECT_LT((destandardize_responses(z, st) - y).cwiseAbs().maxCoeff(), 1e-10);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(2.0, 4.0);
  Eigen::MatrixXd big(7, 9);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 9; ++j) big(i, j) = n(rng);
  const ResponseStats bs = response_stats(big);
  EXPECT_LT((destandardize_responses(standardize_responses(big, bs), bs) - big).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(StandardizeResponses, ConstantColumnFallsBack) {
  Eigen::MatrixXd y(3, 2);
  y << 1.0, 4.0, 2.0, 4.0, 3.0, 4.0;
  const ResponseStats st = response_stats(y);
  ASSERT_EQ(st.zero_variance.size(), 1u);
  EXPECT_EQ(st.zero_variance[0], 1);
  EXPECT_EQ(st.sd[1], 1.0);
  const Eigen::MatrixXd z = standardize_responses(y, st);
  EXPECT_EQ(z.col(1).cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace stargp
