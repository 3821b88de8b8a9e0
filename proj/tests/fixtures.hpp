#pragma once

#include "stargp/oracle.hpp"
#include "stargp/pipeline.hpp"

namespace stargp::testing {

struct SmallProblem {
  Eigen::MatrixXd coords;
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
  Eigen::MatrixXd sigma;
};

/// 3 x 3 grid over 4 frames, Matern-0.5 field, briefly fitted.
inline SmallProblem small_problem(std::uint64_t seed, Index n_train = 30, Index n_test = 5) {
  SmallProblem p;
  p.coords = grid_coords(3, 3, 4);
  SimulationConfig sim;
  sim.replicates = n_train + n_test;
  sim.seed = seed;
  sim.nugget = 1e-3;
  const Eigen::MatrixXd y = simulate_matern_gp(p.coords, sim);
  p.train = y.topRows(n_train);
  p.test = y.bottomRows(n_test);
  p.sigma = matern_covariance(p.coords, sim.lambda_s, sim.lambda_t, sim.nu, sim.variance,
                              sim.nugget);
  return p;
}

inline FittedMap small_map(const SmallProblem& p, OrderingKind kind, Index m = 6,
                           Index min_steps = 20) {
  FitOptions opt;
  opt.ordering = kind;
  opt.m = m;
  opt.fit.epochs = 5;
  opt.fit.min_steps = min_steps;
  opt.fit.seed = 3;
  return fit_model(p.coords, p.train, ScalingParams(0.8, 0.6), opt).map;
}

}  // namespace stargp::testing
