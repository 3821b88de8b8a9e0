#include "stargp/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "stargp/error.hpp"
#include "stargp/random.hpp"

namespace stargp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const double scale = sigma.diagonal().mean();
  for (double jitter = 1e-10; llt.info() != Eigen::Success; jitter *= 10.0) {
    if (jitter > 1e-6) throw numerical_error("oracle covariance is not positive definite");
    Eigen::MatrixXd bumped = sigma;
    bumped.diagonal().array() += jitter * scale;
    llt.compute(bumped);
  }
  return llt;
}

}  // namespace

Eigen::MatrixXd matern_covariance(const Eigen::MatrixXd& coords, double lambda_s,
                                  double lambda_t, MaternSmoothness nu, double variance,
                                  double nugget) {
  if (!(lambda_s > 0.0) || !(lambda_t > 0.0) || variance < 0.0 || nugget < 0.0) {
    throw config_error("simulation scales must be positive and variances non-negative");
  }
  const Index n = coords.rows();
  const Index d = coords.cols() - 1;
  Eigen::MatrixXd sigma(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double ds2 = (coords.row(i).head(d) - coords.row(j).head(d)).squaredNorm();
      const double dt = coords(i, d) - coords(j, d);
      const double r = std::sqrt(ds2 / (lambda_s * lambda_s) + dt * dt / (lambda_t * lambda_t));
      sigma(i, j) = sigma(j, i) = variance * matern_correlation(nu, r);
    }
    sigma(i, i) += nugget;
  }
  return sigma;
}

Eigen::MatrixXd simulate_matern_gp(const Eigen::MatrixXd& coords, const SimulationConfig& config) {
  if (config.replicates < 1) throw config_error("simulation needs at least one replicate");
  const Eigen::MatrixXd sigma = matern_covariance(coords, config.lambda_s, config.lambda_t,
                                                  config.nu, config.variance, config.nugget);
  const Eigen::MatrixXd lower = factor_with_jitter(sigma).matrixL();
  const Index n = coords.rows();
  Eigen::MatrixXd y(config.replicates, n);
  for (Index r = 0; r < config.replicates; ++r) {
    auto rng = make_rng(config.seed, Stream::kSimulate, static_cast<std::uint64_t>(r));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal(rng);
    y.row(r) = (lower * z).transpose();
  }
  if (config.exp_warp) y = y.array().exp().matrix();
  return y;
}

Eigen::MatrixXd grid_coords(Index nx, Index ny, Index frames) {
  if (nx < 1 || ny < 1 || frames < 1) throw config_error("grid dimensions must be positive");
  Eigen::MatrixXd x(nx * ny * frames, 3);
  auto axis = [](Index k, Index count) {
    return count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
  };
  Index row = 0;
  for (Index f = 0; f < frames; ++f) {
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        x.row(row++) << axis(i, nx), axis(j, ny), axis(f, frames);
      }
    }
  }
  return x;
}

GaussianScore exact_gaussian_logscore(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& test,
                                      const Eigen::VectorXd& mean) {
  const Index n = sigma.rows();
  if (test.cols() != n) throw data_error("test replicates do not match the covariance size");
  const Eigen::VectorXd mu = mean.size() == 0 ? Eigen::VectorXd::Zero(n) : mean;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw numerical_error("covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  const double logdet = 2.0 * lower.diagonal().array().log().sum();
  GaussianScore out;
  double sum = 0.0;
  for (Index r = 0; r < test.rows(); ++r) {
    const Eigen::VectorXd w =
        lower.triangularView<Eigen::Lower>().solve((test.row(r).transpose() - mu).eval());
    const double nll = 0.5 * (w.squaredNorm() + logdet + static_cast<double>(n) * kLog2Pi);
    out.per_replicate.push_back(nll);
    sum += nll;
  }
  out.average = sum / static_cast<double>(test.rows());
  return out;
}

GaussianConditional exact_gaussian_conditional(const Eigen::MatrixXd& sigma,
                                               const std::vector<Index>& observed,
                                               const Eigen::VectorXd& values) {
  const Index n = sigma.rows();
  if (static_cast<Index>(observed.size()) != values.size()) {
    throw data_error("observed indices and values differ in length");
  }
  std::vector<bool> is_obs(static_cast<std::size_t>(n), false);
  for (const Index k : observed) {
    if (k < 0 || k >= n) throw data_error("observed index out of range");
    is_obs[static_cast<std::size_t>(k)] = true;
  }
  GaussianConditional out;
  for (Index k = 0; k < n; ++k) {
    if (!is_obs[static_cast<std::size_t>(k)]) out.free.push_back(k);
  }
  const auto nf = static_cast<Index>(out.free.size());
  const auto no = static_cast<Index>(observed.size());
  Eigen::MatrixXd s_ff(nf, nf), s_fo(nf, no), s_oo(no, no);
  for (Index a = 0; a < nf; ++a) {
    for (Index b = 0; b < nf; ++b) s_ff(a, b) = sigma(out.free[a], out.free[b]);
    for (Index b = 0; b < no; ++b) s_fo(a, b) = sigma(out.free[a], observed[b]);
  }
  for (Index a = 0; a < no; ++a) {
    for (Index b = 0; b < no; ++b) s_oo(a, b) = sigma(observed[a], observed[b]);
  }
  if (no == 0) {
    out.mean = Eigen::VectorXd::Zero(nf);
    out.cov = s_ff;
    return out;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("observed covariance block is not positive definite");
  }
  out.mean = s_fo * llt.solve(values);
  out.cov = s_ff - s_fo * llt.solve(s_fo.transpose());
  return out;
}

double nig_marginal_quadrature(const Eigen::VectorXd& y, const Eigen::MatrixXd& g, double alpha,
                               double beta) {
  const auto n = static_cast<double>(y.size());
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw numerical_error("G is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  const double logdet = 2.0 * lower.diagonal().array().log().sum();
  const double quad = y.dot(llt.solve(y));
  // Integrand over u = log d^2: N(y | 0, e^u G) IG(e^u | alpha, beta) e^u.
  auto log_integrand = [&](double u) {
    const double d2 = std::exp(u);
    const double log_normal = -0.5 * n * (kLog2Pi + u) - 0.5 * logdet - 0.5 * quad / d2;
    const double log_ig = alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * u - beta / d2;
    return log_normal + log_ig + u;
  };
  // Centre the window on the peak of the integrand so the rescaled
  // integrand is O(1).
  const double peak = std::log((beta + 0.5 * quad) / (alpha + 0.5 * n));
  const double offset = log_integrand(peak);
  auto f = [&](double u) { return std::exp(log_integrand(u) - offset); };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, peak - 60.0, peak + 60.0, 20, 1e-12, &error);
  if (!(value > 0.0) || !(error <= 1e-9 * value)) {
    throw numerical_error(fmt::format("quadrature did not converge (value {}, error {})", value,
                                      error));
  }
  return std::log(value) + offset;
}

double blr_log_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                        const Eigen::VectorXd& weight_var, const Eigen::MatrixXd& residual_cov,
                        double alpha, double beta) {
  const Index n = y.size();
  const Index p = a.cols();
  if (a.rows() != n || weight_var.size() != p || residual_cov.rows() != n) {
    throw data_error("blr_log_marginal: inconsistent dimensions");
  }
  Eigen::LLT<Eigen::MatrixXd> r_llt(residual_cov);
  if (r_llt.info() != Eigen::Success) throw numerical_error("residual covariance not PD");
  const Eigen::MatrixXd r_lower = r_llt.matrixL();
  double logdet = 2.0 * r_lower.diagonal().array().log().sum();
  const Eigen::VectorXd rinv_y = r_llt.solve(y);
  double quad = y.dot(rinv_y);
  if (p > 0) {
    // Whitened design B = A diag(sqrt(v)); |R + B B'| = |R| |I + B' R^-1 B|.
    const Eigen::MatrixXd b = a * weight_var.array().sqrt().matrix().asDiagonal();
    const Eigen::MatrixXd rinv_b = r_llt.solve(b);
    Eigen::MatrixXd inner = b.transpose() * rinv_b;
    inner.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> inner_llt(inner);
    const Eigen::MatrixXd inner_lower = inner_llt.matrixL();
    logdet += 2.0 * inner_lower.diagonal().array().log().sum();
    const Eigen::VectorXd bt_rinv_y = b.transpose() * rinv_y;
    quad -= bt_rinv_y.dot(inner_llt.solve(bt_rinv_y));
  }
  const double nd = static_cast<double>(n);
  const double alpha_post = alpha + 0.5 * nd;
  const double beta_post = beta + 0.5 * quad;
  return -0.5 * logdet + alpha * std::log(beta) - alpha_post * std::log(beta_post) +
         std::lgamma(alpha_post) - std::lgamma(alpha) - 0.5 * nd * kLog2Pi;
}

}  // namespace stargp
