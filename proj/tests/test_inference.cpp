#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stargp/inference.hpp"
#include "stargp/oracle.hpp"
#include "stargp/ordering.hpp"
#include "stargp/random.hpp"

namespace stargp {
namespace {

struct Instance {
  Eigen::MatrixXd ordered;
  Ordering ordering;
};

Instance make_instance(Index n_points, Index n_rep, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(n_points, 3);
  for (Index i = 0; i < n_points; ++i) x.row(i) << unif(rng), unif(rng), unif(rng);
  SimulationConfig sim;
  sim.replicates = n_rep;
  sim.seed = seed;
  sim.nugget = 0.05;
  const Eigen::MatrixXd y = simulate_matern_gp(x, sim);
  Instance inst{Eigen::MatrixXd(), build_ordering(x, OrderingKind::kMaximin, m)};
  inst.ordered = align_to_ordering(y, inst.ordering.perm);
  return inst;
}

Hyperparams random_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng), u(rng) - 1.0, u(rng), u(rng), u(rng)};
}

TEST(LoglikTerm, AnalyticGradientMatchesCentralDifferences) {
  const Instance inst = make_instance(40, 6, 5, 11);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Hyperparams theta = random_theta(rng);
    const Index i = 1 + static_cast<Index>(rng() % 39);
    const TermValue tv = loglik_term_with_gradient(i, inst.ordered, inst.ordering, theta, 1.0);
    const ThetaVector base = theta.as_vector();
    for (Index k = 0; k < 6; ++k) {
      const double h = 1e-5;
      ThetaVector hi = base, lo = base;
      hi[k] += h;
      lo[k] -= h;
      const double fd = (loglik_term(i, inst.ordered, inst.ordering, Hyperparams::from_vector(hi), 1.0) -
                         loglik_term(i, inst.ordered, inst.ordering, Hyperparams::from_vector(lo), 1.0)) /
                        (2.0 * h);
      EXPECT_NEAR(tv.grad[k], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
  }
}

TEST(LoglikTerm, ForwardDifferencePathAgreesWithAnalytic) {
  const Instance inst = make_instance(30, 5, 4, 5);
  const Hyperparams theta{0.2, -0.3, -1.0, 0.1, 0.4, -0.2};
  for (Index i = 0; i < 30; i += 7) {
    const TermValue a = loglik_term_with_gradient(i, inst.ordered, inst.ordering, theta, 1.0,
                                                  GradientMethod::kAnalytic);
    const TermValue f = loglik_term_with_gradient(i, inst.ordered, inst.ordering, theta, 1.0,
                                                  GradientMethod::kForwardDifference);
    for (Index k = 0; k < 6; ++k) {
      EXPECT_NEAR(a.grad[k], f.grad[k], 1e-4 * std::max(1.0, std::abs(a.grad[k])));
    }
  }
}

TEST(LoglikTerm, FirstTermIsStudentTMarginal) {
  const Instance inst = make_instance(20, 4, 3, 9);
  const Hyperparams theta{0.3, 0.0, -1.0, 0.0, 0.0, 0.0};
  const double value = loglik_term(0, inst.ordered, inst.ordering, theta, 1.0);
  const PriorSpec prior = make_prior(inst.ordering.l[0], 0, theta, 1.0);
  const Eigen::VectorXd y = inst.ordered.col(0);
  const double quad = nig_marginal_quadrature(y, Eigen::MatrixXd::Identity(4, 4), prior.alpha,
                                              prior.beta);
  EXPECT_NEAR(value, quad, 1e-8);
}

TEST(LoglikTerm, SingleZeroReplicate) {
  // n = 1, y = 0 gives lgamma(a + 1/2) - lgamma(a) - log(beta)/2 - log|G|/2 - log(2 pi)/2.
  Ordering ord;
  ord.kind = OrderingKind::kMaximin;
  ord.m = 1;
  ord.perm = {0, 1};
  ord.l = {2.0, 0.5};
  ord.neighbors = {{}, {0}};
  Eigen::MatrixXd y(1, 2);
  y << 0.7, 0.0;
  const Hyperparams theta{0.1, 0.2, -0.5, 0.3, -0.2, 0.1};
  const PriorSpec prior = make_prior(0.5, 1, theta, 1.0);
  const Eigen::MatrixXd a = y.col(0);
  const double g = gram(a, prior)(0, 0);
  const double expected = std::lgamma(prior.alpha + 0.5) - std::lgamma(prior.alpha) -
                          0.5 * std::log(prior.beta) - 0.5 * std::log(g) -
                          0.5 * std::log(2.0 * M_PI);
  EXPECT_NEAR(loglik_term(1, y, ord, theta, 1.0), expected, 1e-12);
}

TEST(LoglikTerm, UnaffectedByColumnsOutsideItsConditioningSet) {
  Instance inst = make_instance(30, 5, 3, 21);
  const Hyperparams theta{0.0, 0.1, -1.0, 0.0, 0.0, 0.0};
  const Index i = 25;
  const double before = loglik_term(i, inst.ordered, inst.ordering, theta, 1.0);
  const auto& nb = inst.ordering.neighbors[i];
  for (Index j = 0; j < 30; ++j) {
    if (j == i || std::find(nb.begin(), nb.end(), j) != nb.end()) continue;
    inst.ordered.col(j).array() += 3.5;
  }
  EXPECT_EQ(loglik_term(i, inst.ordered, inst.ordering, theta, 1.0), before);
}

TEST(IntegratedLoglik, SingleTermAndPartitionAdditivity) {
  const Instance inst = make_instance(25, 5, 4, 2);
  const Hyperparams theta{0.1, 0.0, -1.0, 0.2, 0.0, 0.3};
  double sum = 0.0;
  for (Index i = 0; i < 25; ++i) sum += loglik_term(i, inst.ordered, inst.ordering, theta, 1.0);
  EXPECT_NEAR(integrated_loglik(inst.ordered, inst.ordering, theta, 1.0), sum, 1e-10);
  EXPECT_EQ(integrated_loglik(inst.ordered, inst.ordering, theta, 1.0, 1),
            integrated_loglik(inst.ordered, inst.ordering, theta, 1.0, 4));
}

TEST(IntegratedLoglik, ReplicateRowPermutationInvariance) {
  const Instance inst = make_instance(25, 6, 4, 4);
  const Hyperparams theta{0.0, 0.3, -1.5, 0.0, 0.1, 0.0};
  Eigen::MatrixXd shuffled = inst.ordered.colwise().reverse();
  EXPECT_NEAR(integrated_loglik(inst.ordered, inst.ordering, theta, 1.0),
              integrated_loglik(shuffled, inst.ordering, theta, 1.0), 1e-9);
}

TEST(IntegratedLoglik, PureLinearLimitMatchesDenseRegression) {
  const Instance inst = make_instance(12, 5, 11, 8);
  Hyperparams theta{0.2, 0.1, -800.0, 0.0, -0.5, 0.0};
  for (Index i = 0; i < 12; ++i) {
    const auto& nb = inst.ordering.neighbors[i];
    const PriorSpec prior = make_prior(inst.ordering.l[i], static_cast<Index>(nb.size()), theta, 1.0);
    ASSERT_EQ(prior.sigma2, 0.0);
    const Eigen::MatrixXd a = neighbor_matrix(inst.ordered, inst.ordering, i);
    const double oracle = blr_log_marginal(inst.ordered.col(i), a, prior.q2 / prior.e_d2,
                                           Eigen::MatrixXd::Identity(5, 5), prior.alpha, prior.beta);
    const double term = loglik_term(i, inst.ordered, inst.ordering, theta, 1.0);
    EXPECT_NEAR(term, oracle, 1e-9 * std::abs(oracle)) << "term " << i;
  }
}

TEST(FitTheta, FullBatchTraceIsNonDecreasingWithSmallSteps) {
  const Instance inst = make_instance(40, 8, 5, 13);
  FitConfig cfg;
  cfg.epochs = 25;
  cfg.min_steps = 0;
  cfg.batch_size = 40;
  cfg.step = 0.01;
  const ThetaFit fit = fit_theta(inst.ordered, inst.ordering, 1.0, cfg);
  ASSERT_EQ(fit.trace.objective.size(), 26u);
  for (std::size_t k = 1; k < fit.trace.objective.size(); ++k) {
    EXPECT_GE(fit.trace.objective[k], fit.trace.objective[k - 1] - 1e-9) << "epoch " << k;
  }
  EXPECT_GT(fit.trace.objective.back(), fit.trace.objective.front());
}

TEST(FitTheta, FixedComponentsStayAtTheirInitialValue) {
  const Instance inst = make_instance(30, 6, 4, 17);
  FitConfig cfg;
  cfg.epochs = 5;
  cfg.min_steps = 0;
  cfg.init = Hyperparams{0.0, 0.0, -10.0, 0.0, 0.0, 0.0};
  cfg.fixed[kThetaS1] = true;
  const ThetaFit fit = fit_theta(inst.ordered, inst.ordering, 1.0, cfg);
  EXPECT_EQ(fit.theta.theta_s1, -10.0);
}

TEST(FitTheta, DeterministicForSeedAndThreadCount) {
  const Instance inst = make_instance(50, 5, 5, 23);
  FitConfig cfg;
  cfg.epochs = 4;
  cfg.min_steps = 0;
  cfg.batch_size = 16;
  cfg.seed = 99;
  const ThetaFit a = fit_theta(inst.ordered, inst.ordering, 1.0, cfg);
  cfg.threads = 3;
  const ThetaFit b = fit_theta(inst.ordered, inst.ordering, 1.0, cfg);
  EXPECT_EQ(a.theta.as_vector(), b.theta.as_vector());
  EXPECT_EQ(a.trace.objective, b.trace.objective);
}

TEST(BuildFittedMap, CachesHoldPosteriorShapes) {
  const Instance inst = make_instance(20, 6, 3, 31);
  const Hyperparams theta{0.0, 0.2, -1.0, 0.0, 0.0, 0.0};
  ResponseStats stats{Eigen::VectorXd::Zero(20), Eigen::VectorXd::Ones(20), {}};
  const FittedMap map = build_fitted_map(inst.ordered, inst.ordering, theta, 1.0,
                                         ScalingParams(1.0, 1.0), stats, ColumnStats{},
                                         Eigen::MatrixXd());
  ASSERT_EQ(map.caches.size(), 20u);
  for (Index i = 0; i < 20; ++i) {
    const TermCache& c = map.caches[i];
    EXPECT_DOUBLE_EQ(c.alpha_tilde - c.alpha, 3.0);
    EXPECT_GT(c.beta_tilde, c.beta);
    EXPECT_GT(c.alpha_tilde, 1.0);
  }
}

TEST(SelectM, SingleElementGridReturnsIt) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(30, 3);
  for (Index i = 0; i < 30; ++i) x.row(i) << unif(rng), unif(rng), unif(rng);
  SimulationConfig sim;
  sim.replicates = 10;
  const Eigen::MatrixXd y = simulate_matern_gp(x, sim);
  const Ordering base = build_ordering(x, OrderingKind::kMaximin, 6);
  FitConfig cfg;
  cfg.epochs = 3;
  cfg.min_steps = 0;
  const auto builder = [&](Index m) { return with_neighbor_count(base, x, m); };
  const SelectMResult r = select_m(y.topRows(7), y.bottomRows(3), builder, {4}, 1.0, cfg);
  EXPECT_EQ(r.best_m, 4);
  ASSERT_EQ(r.validation_score.size(), 1u);
  const SelectMResult again = select_m(y.topRows(7), y.bottomRows(3), builder, {4}, 1.0, cfg);
  EXPECT_EQ(r.validation_score, again.validation_score);
}

// Exact 3-sparse triangular model: y_i = 0.5, 0.4, 0.4 times its three
// nearest predecessors plus noise.
TEST(SelectM, RecoversKnownSparsity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n_points = 60;
  Eigen::MatrixXd x(n_points, 3);
  for (Index i = 0; i < n_points; ++i) x.row(i) << unif(rng), unif(rng), unif(rng);
  const Ordering base = build_ordering(x, OrderingKind::kMaximin, 8);
  const Ordering three = with_neighbor_count(base, x, 3);
  const Index n = 100;
  Eigen::MatrixXd ordered(n, n_points);
  const double w[3] = {0.5, 0.4, 0.4};
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < n_points; ++i) {
      double v = 0.5 * normal(rng);
      const auto& nb = three.neighbors[i];
      for (std::size_t k = 0; k < nb.size(); ++k) v += w[k] * ordered(r, nb[k]);
      ordered(r, i) = v;
    }
  }
  Eigen::MatrixXd y(n, n_points);
  for (Index i = 0; i < n_points; ++i) y.col(base.perm[i]) = ordered.col(i);
  const ResponseStats stats = response_stats(y.topRows(75));
  const Eigen::MatrixXd train = standardize_responses(y.topRows(75), stats);
  const Eigen::MatrixXd val = standardize_responses(y.bottomRows(25), stats);
  FitConfig cfg;
  cfg.epochs = 30;
  cfg.min_steps = 120;
  const auto builder = [&](Index m) { return with_neighbor_count(base, x, m); };
  const SelectMResult r = select_m(train, val, builder, {1, 2, 3, 5, 8}, 1.0, cfg);
  EXPECT_GE(r.best_m, 3);
  // Beyond m = 3 the validation score stays within a small band.
  const double at3 = r.validation_score[2];
  EXPECT_LT(std::abs(r.validation_score[3] - at3), 0.02 * n_points);
  EXPECT_LT(std::abs(r.validation_score[4] - at3), 0.02 * n_points);
  EXPECT_GT(r.validation_score[0], at3);
}

}  // namespace
}  // namespace stargp
