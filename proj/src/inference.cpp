#include "stargp/inference.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stargp/correlation.hpp"
#include "stargp/error.hpp"
#include "stargp/parallel.hpp"
#include "stargp/random.hpp"

namespace stargp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Neighbor values transposed: row k = k-th nearest neighbor, column j = replicate j.
Eigen::MatrixXd neighbor_block(const Eigen::MatrixXd& ordered, const Ordering& ordering,
                               Index i) {
  const auto& nb = ordering.neighbors[static_cast<std::size_t>(i)];
  const Index n = ordered.rows();
  Eigen::MatrixXd at(static_cast<Index>(nb.size()), n);
  for (std::size_t k = 0; k < nb.size(); ++k) {
    at.row(static_cast<Index>(k)) = ordered.col(nb[k]).transpose();
  }
  return at;
}

struct TermEval {
  TermValue result;
  TermCache cache;
};

TermEval evaluate_term(Index i, const Eigen::MatrixXd& ordered, const Ordering& ordering,
                       const Hyperparams& theta, double g, bool want_grad, bool want_cache) {
  if (i < 0 || i >= ordered.cols()) {
    throw data_error(fmt::format("likelihood term {} out of range", i + 1));
  }
  const Index n = ordered.rows();
  const double l = ordering.l[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd at = neighbor_block(ordered, ordering, i);
  const Index p = at.rows();
  const PriorSpec prior = make_prior(l, p, theta, g);
  const Eigen::VectorXd y = ordered.col(i);

  Eigen::MatrixXd w;  // sqrt(Q) A^T, p x n
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rho;  // nonlinear correlation matrix
  Eigen::MatrixXd radius;
  if (p > 0) {
    w = prior.q2.array().sqrt().matrix().asDiagonal() * at;
    const Eigen::MatrixXd lin = w.transpose() * w;
    rho.resize(n, n);
    radius.resize(n, n);
    for (Index j = 0; j < n; ++j) {
      rho(j, j) = 1.0;
      radius(j, j) = 0.0;
      for (Index k = j + 1; k < n; ++k) {
        const double r = (w.col(j) - w.col(k)).norm() / prior.gamma;
        radius(j, k) = radius(k, j) = r;
        rho(j, k) = rho(k, j) = matern15_correlation(r);
      }
    }
    kernel = (lin + prior.sigma2 * rho) / prior.e_d2;
    // lin is symmetric up to rounding; enforce exact symmetry.
    kernel = 0.5 * (kernel + kernel.transpose()).eval();
  }
  Eigen::MatrixXd gmat = kernel;
  gmat.diagonal().array() += 1.0;

  Eigen::LLT<Eigen::MatrixXd> llt(gmat);
  for (double jitter = 1e-10; llt.info() != Eigen::Success; jitter *= 10.0) {
    if (jitter > 1e-6) {
      throw numerical_error(
          fmt::format("Gram matrix for index {} is not positive definite after jitter", i + 1));
    }
    Eigen::MatrixXd bumped = gmat;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  const double logdet = 2.0 * lower.diagonal().array().log().sum();
  const Eigen::VectorXd u = llt.solve(y);
  const double quad = y.dot(u);
  const double alpha = prior.alpha;
  const double beta = prior.beta;
  const double alpha_t = alpha + 0.5 * static_cast<double>(n);
  const double beta_t = beta + 0.5 * quad;

  TermEval out;
  out.result.value = -0.5 * logdet + alpha * std::log(beta) - alpha_t * std::log(beta_t) +
                     std::lgamma(alpha_t) - std::lgamma(alpha) -
                     0.5 * static_cast<double>(n) * kLog2Pi;
  if (want_cache) {
    out.cache.chol = lower;
    out.cache.solved = u;
    out.cache.alpha = alpha;
    out.cache.beta = beta;
    out.cache.alpha_tilde = alpha_t;
    out.cache.beta_tilde = beta_t;
  }
  if (!want_grad) return out;

  const double log_l = std::log(l);
  const double c_d2 = std::exp(theta.theta_d2) * log_l;
  const double c_s2 = std::exp(theta.theta_s2) * log_l;
  const double coef_beta = alpha / beta - alpha_t / beta_t;
  const double coef_quad = 0.5 * alpha_t / beta_t;
  ThetaVector grad = ThetaVector::Zero();
  // d beta / d theta: beta is proportional to E(d^2).
  grad[kThetaD1] = coef_beta * beta;
  grad[kThetaD2] = coef_beta * beta * c_d2;

  if (p > 0) {
    const Eigen::MatrixXd ginv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    auto contract = [&](const Eigen::MatrixXd& dg) {
      const double tr = (ginv.array() * dg.array()).sum();
      const double q = u.dot(dg * u);
      return -0.5 * tr + coef_quad * q;
    };
    const double inv_e = 1.0 / prior.e_d2;
    const double g_kernel = contract(kernel);
    grad[kThetaD1] -= g_kernel;
    grad[kThetaD2] -= g_kernel * c_d2;

    const Eigen::MatrixXd nonlin = (prior.sigma2 * inv_e) * rho;
    const double g_nonlin = contract(nonlin);
    grad[kThetaS1] = g_nonlin;
    grad[kThetaS2] = g_nonlin * c_s2;

    // theta_q: d log q2_k / d theta_q = -k exp(theta_q).
    const double rate = std::exp(theta.theta_q);
    Eigen::VectorXd dlogq(p);
    for (Index k = 0; k < p; ++k) dlogq[k] = -static_cast<double>(k + 1) * rate;
    Eigen::MatrixXd dq = w.transpose() * dlogq.asDiagonal() * w;
    const double inv_g2 = 1.0 / (prior.gamma * prior.gamma);
    Eigen::MatrixXd dgamma(n, n);
    for (Index j = 0; j < n; ++j) {
      dgamma(j, j) = 0.0;
      for (Index k = j + 1; k < n; ++k) {
        double d2q = 0.0;
        for (Index c = 0; c < p; ++c) {
          const double diff = w(c, j) - w(c, k);
          d2q += dlogq[c] * diff * diff;
        }
        const double r = radius(j, k);
        const double decay = std::exp(-kSqrt3 * r);
        const double v = prior.sigma2 * (-1.5 * decay) * d2q * inv_g2;
        dq(j, k) += v;
        dq(k, j) += v;
        dgamma(j, k) = dgamma(k, j) = prior.sigma2 * 3.0 * r * r * decay;
      }
    }
    dq = 0.5 * (dq + dq.transpose()).eval();
    grad[kThetaQ] = contract(dq * inv_e);
    grad[kThetaGamma] = contract(dgamma * inv_e);
  }
  out.result.grad = grad;
  return out;
}

}  // namespace

Eigen::MatrixXd align_to_ordering(const Eigen::MatrixXd& replicates,
                                  const std::vector<Index>& perm) {
  if (static_cast<Index>(perm.size()) != replicates.cols()) {
    throw data_error(fmt::format("responses have {} columns but the ordering has {} points",
                                 replicates.cols(), perm.size()));
  }
  Eigen::MatrixXd out(replicates.rows(), replicates.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.col(static_cast<Index>(i)) = replicates.col(perm[i]);
  }
  return out;
}

Eigen::MatrixXd neighbor_matrix(const Eigen::MatrixXd& ordered, const Ordering& ordering,
                                Index i) {
  return neighbor_block(ordered, ordering, i).transpose();
}

double loglik_term(Index i, const Eigen::MatrixXd& ordered, const Ordering& ordering,
                   const Hyperparams& theta, double g) {
  return evaluate_term(i, ordered, ordering, theta, g, false, false).result.value;
}

TermValue loglik_term_with_gradient(Index i, const Eigen::MatrixXd& ordered,
                                    const Ordering& ordering, const Hyperparams& theta,
                                    double g, GradientMethod method) {
  if (method == GradientMethod::kAnalytic) {
    return evaluate_term(i, ordered, ordering, theta, g, true, false).result;
  }
  TermValue out;
  out.value = loglik_term(i, ordered, ordering, theta, g);
  const ThetaVector base = theta.as_vector();
  constexpr double kStep = 1e-7;
  for (Index k = 0; k < base.size(); ++k) {
    ThetaVector shifted = base;
    shifted[k] += kStep;
    out.grad[k] =
        (loglik_term(i, ordered, ordering, Hyperparams::from_vector(shifted), g) - out.value) /
        kStep;
  }
  return out;
}

double integrated_loglik(const Eigen::MatrixXd& ordered, const Ordering& ordering,
                         const Hyperparams& theta, double g, int threads) {
  const auto n = static_cast<std::size_t>(ordered.cols());
  std::vector<double> terms(n);
  parallel_for(n, threads, [&](std::size_t i) {
    terms[i] = loglik_term(static_cast<Index>(i), ordered, ordering, theta, g);
  });
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

Hyperparams initial_theta(const Eigen::MatrixXd& ordered) {
  Hyperparams theta;
  const Eigen::VectorXd first = ordered.col(0);
  const double var = (first.array() - first.mean()).square().mean();
  theta.theta_d1 = var > 0.0 ? std::log(var) : 0.0;
  theta.theta_s1 = theta.theta_d1 - 2.0;
  return theta;
}

ThetaFit fit_theta(const Eigen::MatrixXd& ordered, const Ordering& ordering, double g,
                   const FitConfig& config) {
  const Index n_points = ordered.cols();
  if (ordered.rows() < 2) throw data_error("fit_theta needs at least two replicates");
  if (config.batch_size < 1 || config.epochs < 1 || !(config.step > 0.0)) {
    throw config_error("fit_theta needs batch_size >= 1, epochs >= 1 and step > 0");
  }
  const Index batch = std::min(config.batch_size, n_points);
  const Index batches_per_epoch = (n_points + batch - 1) / batch;
  const Index epochs = std::max(
      config.epochs, (config.min_steps + batches_per_epoch - 1) / batches_per_epoch);

  ThetaVector x = config.init.value_or(initial_theta(ordered)).as_vector();
  ThetaVector m1 = ThetaVector::Zero();
  ThetaVector m2 = ThetaVector::Zero();
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double lr = config.step;
  Index step_count = 0;
  Index failures = 0;

  auto rng = make_rng(config.seed, Stream::kMinibatch);
  std::vector<Index> order(static_cast<std::size_t>(n_points));
  std::iota(order.begin(), order.end(), Index{0});

  ThetaFit fit;
  double objective = integrated_loglik(ordered, ordering, Hyperparams::from_vector(x), g,
                                       config.threads);
  if (!std::isfinite(objective)) {
    throw numerical_error("integrated likelihood is not finite at the initial theta");
  }
  fit.trace.objective.push_back(objective);
  fit.trace.step_size.push_back(lr);
  ThetaVector best_x = x;
  double best = objective;

  for (Index epoch = 1; epoch <= epochs; ++epoch) {
    const ThetaVector epoch_start = x;
    const ThetaVector m1_start = m1, m2_start = m2;
    const Index steps_start = step_count;
    std::shuffle(order.begin(), order.end(), rng);
    for (Index b = 0; b < batches_per_epoch; ++b) {
      const Index begin = b * batch;
      const Index end = std::min(n_points, begin + batch);
      const auto count = static_cast<std::size_t>(end - begin);
      std::vector<ThetaVector> grads(count);
      const Hyperparams theta = Hyperparams::from_vector(x);
      parallel_for(count, config.threads, [&](std::size_t k) {
        grads[k] = loglik_term_with_gradient(order[static_cast<std::size_t>(begin) + k], ordered,
                                             ordering, theta, g, config.gradient)
                       .grad;
      });
      ThetaVector grad = ThetaVector::Zero();
      for (const auto& gk : grads) grad += gk;
      grad *= static_cast<double>(n_points) / static_cast<double>(count);
      for (std::size_t k = 0; k < Hyperparams::kCount; ++k) {
        if (config.fixed[k]) grad[static_cast<Index>(k)] = 0.0;
      }
      if (!grad.allFinite()) {
        lr *= 0.5;
        continue;
      }
      ++step_count;
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * grad;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count));
      x.array() += lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
    }

    double next = -std::numeric_limits<double>::infinity();
    try {
      next = integrated_loglik(ordered, ordering, Hyperparams::from_vector(x), g, config.threads);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumerical) throw;
    }
    if (!std::isfinite(next)) {
      // Reject the whole epoch.
      x = epoch_start;
      m1 = m1_start;
      m2 = m2_start;
      step_count = steps_start;
      lr *= 0.5;
      if (++failures > 20 || lr < 1e-10) {
        throw numerical_error("fit_theta: objective stayed non-finite after repeated step halving");
      }
      fit.trace.objective.push_back(objective);
      fit.trace.step_size.push_back(lr);
      continue;
    }
    if (next < objective) lr *= 0.5;
    objective = next;
    fit.trace.objective.push_back(objective);
    fit.trace.step_size.push_back(lr);
    if (objective > best) {
      best = objective;
      best_x = x;
    }
  }
  fit.theta = Hyperparams::from_vector(best_x);
  return fit;
}

PriorSpec FittedMap::prior(Index i) const {
  const auto& nb = ordering.neighbors[static_cast<std::size_t>(i)];
  return make_prior(ordering.l[static_cast<std::size_t>(i)], static_cast<Index>(nb.size()), theta,
                    g);
}

FittedMap build_fitted_map(Eigen::MatrixXd train_ordered, Ordering ordering,
                           const Hyperparams& theta, double g, const ScalingParams& scaling,
                           ResponseStats response_stats, ColumnStats coord_stats,
                           Eigen::MatrixXd raw_coords, int threads) {
  if (train_ordered.cols() != ordering.size()) {
    throw data_error("training responses are not aligned with the ordering");
  }
  FittedMap map;
  map.theta = theta;
  map.g = g;
  map.scaling = scaling;
  map.response_stats = std::move(response_stats);
  map.coord_stats = std::move(coord_stats);
  map.raw_coords = std::move(raw_coords);
  map.train = std::move(train_ordered);
  map.ordering = std::move(ordering);
  const auto n = static_cast<std::size_t>(map.train.cols());
  map.caches.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    map.caches[i] = evaluate_term(static_cast<Index>(i), map.train, map.ordering, theta, g,
                                  false, true)
                        .cache;
  });
  return map;
}

}  // namespace stargp
