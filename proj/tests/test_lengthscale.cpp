#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "stargp/error.hpp"
#include "stargp/lengthscale.hpp"
#include "stargp/oracle.hpp"

namespace stargp {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Dense multivariate normal negative log density, replicates summed.
double dense_nll(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const MaternGPParams& p) {
  const Index n = x.rows();
  const Index t = x.cols() - 1;
  Eigen::MatrixXd k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double ds = (x.row(i).head(t) - x.row(j).head(t)).squaredNorm();
      const double dt = (x(i, t) - x(j, t)) * (x(i, t) - x(j, t));
      const double r = std::sqrt(ds / (p.lambda_s * p.lambda_s) + dt / (p.lambda_t * p.lambda_t));
      k(i, j) = p.amplitude * (1.0 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r);
    }
    k(i, i) += p.nugget;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const double logdet = std::log(std::abs(lu.determinant()));
  double total = 0.0;
  for (Index r = 0; r < y.rows(); ++r) {
    const Eigen::VectorXd v = y.row(r).transpose();
    total += 0.5 * v.dot(lu.solve(v)) + 0.5 * logdet + 0.5 * n * kLog2Pi;
  }
  return total;
}

Eigen::MatrixXd random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = z(rng);
  return m;
}

// Standardized space-time coordinates: a jittered 2-D grid over several frames.
CoordinateSet design(Index side, Index frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  Eigen::MatrixXd x(side * side * frames, 3);
  Index row = 0;
  for (Index f = 0; f < frames; ++f)
    for (Index a = 0; a < side; ++a)
      for (Index b = 0; b < side; ++b) x.row(row++) << a + u(rng), b + u(rng), f;
  return standardize_coords(CoordinateSet::from_matrix(x));
}

TEST(Matern15, Values) {
  EXPECT_DOUBLE_EQ(matern15(0.0, 2.5), 2.5);
  EXPECT_NEAR(matern15(1.0), (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(matern15(1.0), 0.4833577245965077, 1e-15);
  double prev = matern15(0.0);
  for (double r = 0.05; r < 40.0; r += 0.05) {
    const double v = matern15(r);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-25);
}

TEST(GpNll, SinglePointAtZero) {
  Eigen::MatrixXd x(1, 2);
  x << 0.0, 0.0;
  const Eigen::MatrixXd y = Eigen::MatrixXd::Zero(1, 1);
  const GpNll v = gp_nll(x, y, {1.0, 1.0, 0.5, 0.5}, false);
  EXPECT_NEAR(v.value, 0.5 * kLog2Pi, 1e-14);
}

TEST(GpNll, DistantPointsFactorize) {
  Eigen::MatrixXd x(2, 2);
  x << 0.0, 0.0, 1e3, 1e3;
  Eigen::MatrixXd y(1, 2);
  y << 0.7, -1.3;
  const MaternGPParams p{1.0, 1.0, 0.8, 0.2};
  const double uni = [&] {
    double s = 0.0;
    for (double v : {0.7, -1.3}) s += 0.5 * v * v + 0.5 * kLog2Pi;
    return s;
  }();
  EXPECT_NEAR(gp_nll(x, y, p, false).value, uni, 1e-12);
}

TEST(GpNll, MatchesDenseDensity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = random_matrix(5, 3, 10 + trial);
    const Eigen::MatrixXd y = random_matrix(3, 5, 20 + trial);
    const MaternGPParams p{u(rng), u(rng), u(rng), 0.1 * u(rng)};
    EXPECT_NEAR(gp_nll(x, y, p, false).value, dense_nll(x, y, p), 1e-10);
  }
}

TEST(GpNll, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::MatrixXd x = random_matrix(12, 3, 30);
  const Eigen::MatrixXd y = random_matrix(4, 12, 31);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector4d lp(u(rng), u(rng), u(rng), u(rng) - 2.0);
    auto at = [&](const Eigen::Vector4d& v) {
      return MaternGPParams{std::exp(v[0]), std::exp(v[1]), std::exp(v[2]), std::exp(v[3])};
    };
    const GpNll base = gp_nll(x, y, at(lp));
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-5;
      Eigen::Vector4d hi = lp, lo = lp;
      hi[k] += h;
      lo[k] -= h;
      const double fd =
          (gp_nll(x, y, at(hi), false).value - gp_nll(x, y, at(lo), false).value) / (2.0 * h);
      EXPECT_NEAR(base.grad[k], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
  }
}

TEST(GpNll, PermutationAndReparameterizationInvariance) {
  const Eigen::MatrixXd x = random_matrix(10, 3, 40);
  const Eigen::MatrixXd y = random_matrix(2, 10, 41);
  const MaternGPParams p{0.8, 1.3, 1.1, 0.05};
  const double base = gp_nll(x, y, p, false).value;

  std::vector<Index> perm(10);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  Eigen::MatrixXd xp(10, 3), yp(2, 10);
  for (Index k = 0; k < 10; ++k) {
    xp.row(k) = x.row(perm[k]);
    yp.col(k) = y.col(perm[k]);
  }
  EXPECT_NEAR(gp_nll(xp, yp, p, false).value, base, 1e-10);

  Eigen::MatrixXd xs = x;
  xs.leftCols(2) *= 3.0;
  MaternGPParams ps = p;
  ps.lambda_s *= 3.0;
  EXPECT_NEAR(gp_nll(xs, y, ps, false).value, base, 1e-10);
}

TEST(FitScales, RecoversSpaceTimeRatio) {
  const CoordinateSet coords = design(8, 6, 1);
  SimulationConfig sim;
  sim.nu = MaternSmoothness::kThreeHalves;
  sim.replicates = 5;
  sim.seed = 7;
  const Eigen::MatrixXd y = simulate_matern_gp(coords.values(), sim);
  LengthscaleConfig cfg;
  cfg.n_points = 300;
  cfg.n_replicates = 5;
  cfg.seed = 3;
  const ScaleFit fit = fit_scales_once(coords, y, cfg);
  const double eta = std::pow(fit.params.lambda_s / fit.params.lambda_t, 2);
  EXPECT_GT(eta, 4.0 / 2.0);
  EXPECT_LT(eta, 4.0 * 2.0);
  for (std::size_t k = 1; k < fit.trace.size(); ++k) EXPECT_TRUE(std::isfinite(fit.trace[k]));
}

TEST(FitScales, ExchangeableDataGivesUnitRatio) {
  const CoordinateSet coords = design(8, 6, 2);
  SimulationConfig sim;
  sim.nu = MaternSmoothness::kThreeHalves;
  sim.lambda_s = 0.6;
  sim.lambda_t = 0.6;
  sim.replicates = 5;
  sim.seed = 8;
  const Eigen::MatrixXd y = simulate_matern_gp(coords.values(), sim);
  LengthscaleConfig cfg;
  cfg.n_points = 300;
  cfg.seed = 4;
  const ScaleFit fit = fit_scales_once(coords, y, cfg);
  const double ratio = fit.params.lambda_s / fit.params.lambda_t;
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 2.0);
}

TEST(FitScales, WhiteNoiseCollapsesWithoutFailing) {
  const CoordinateSet coords = design(6, 5, 3);
  const Eigen::MatrixXd y = random_matrix(5, coords.size(), 50);
  LengthscaleConfig cfg;
  cfg.n_points = 180;
  cfg.seed = 5;
  const ScaleEstimate est = estimate_scales(coords, y, cfg, 2);
  ASSERT_EQ(est.repeats.size(), 2u);
  for (const ScaleFit& f : est.repeats) EXPECT_TRUE(f.collapsed);
  EXPECT_FALSE(est.warnings.empty());
}

TEST(FitScales, ConstantTimeIsUnidentifiable) {
  Eigen::MatrixXd x(6, 2);
  x << 0, 1, 1, 1, 2, 1, 3, 1, 4, 1, 5, 1;
  const CoordinateSet coords = standardize_coords(CoordinateSet::from_matrix(x));
  LengthscaleConfig cfg;
  cfg.n_points = 6;
  EXPECT_THROW(fit_scales_once(coords, random_matrix(3, 6, 1), cfg), Error);
}

TEST(EstimateScales, SingleRepeatAndDeterminism) {
  const CoordinateSet coords = design(6, 4, 4);
  SimulationConfig sim;
  sim.replicates = 6;
  sim.seed = 9;
  const Eigen::MatrixXd y = simulate_matern_gp(coords.values(), sim);
  LengthscaleConfig cfg;
  cfg.n_points = 100;
  cfg.n_replicates = 3;
  cfg.epochs = 60;
  cfg.seed = 6;
  const ScaleFit once = fit_scales_once(coords, y, cfg);
  const ScaleEstimate one = estimate_scales(coords, y, cfg, 1);
  EXPECT_EQ(one.scaling.lambda_s(), once.params.lambda_s);
  EXPECT_EQ(one.scaling.lambda_t(), once.params.lambda_t);

  const ScaleEstimate a = estimate_scales(coords, y, cfg, 5, 1);
  const ScaleEstimate b = estimate_scales(coords, y, cfg, 5, 3);
  EXPECT_EQ(a.scaling.lambda_s(), b.scaling.lambda_s());
  EXPECT_EQ(a.scaling.lambda_t(), b.scaling.lambda_t());
  EXPECT_EQ(a.se_lambda_s, b.se_lambda_s);
  EXPECT_NE(a.repeats[0].location_subset, a.repeats[1].location_subset);
}

TEST(EstimateScales, RepeatsAgreeOnSimulatedData) {
  const CoordinateSet coords = design(8, 6, 5);
  SimulationConfig sim;
  sim.nu = MaternSmoothness::kThreeHalves;
  sim.replicates = 10;
  sim.seed = 10;
  const Eigen::MatrixXd y = simulate_matern_gp(coords.values(), sim);
  LengthscaleConfig cfg;
  cfg.n_points = 250;
  cfg.seed = 11;
  const ScaleEstimate est = estimate_scales(coords, y, cfg, 5);
  ASSERT_EQ(est.repeats.size(), 5u);
  for (bool spatial : {true, false}) {
    double mean = 0.0, ss = 0.0;
    for (const ScaleFit& f : est.repeats) mean += spatial ? f.params.lambda_s : f.params.lambda_t;
    mean /= 5.0;
    for (const ScaleFit& f : est.repeats) {
      const double v = spatial ? f.params.lambda_s : f.params.lambda_t;
      ss += (v - mean) * (v - mean);
    }
    EXPECT_LT(std::sqrt(ss / 4.0) / mean, 0.2) << (spatial ? "lambda_s" : "lambda_t");
  }
}

}  // namespace
}  // namespace stargp
