#include "stargp/lengthscale.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "stargp/correlation.hpp"
#include "stargp/error.hpp"
#include "stargp/parallel.hpp"
#include "stargp/random.hpp"

namespace stargp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

std::vector<Index> sample_without_replacement(Index population, Index count,
                                              std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(population));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, population - 1);
    std::swap(idx[static_cast<std::size_t>(k)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Smallest nonzero separation along the spatial block and the time axis.
std::pair<double, double> min_gaps(const Eigen::MatrixXd& coords) {
  const Index d = coords.cols() - 1;
  double gs = std::numeric_limits<double>::infinity();
  double gt = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < coords.rows(); ++i) {
    for (Index j = i + 1; j < coords.rows(); ++j) {
      const double ds = (coords.row(i).head(d) - coords.row(j).head(d)).norm();
      const double dt = std::abs(coords(i, d) - coords(j, d));
      if (ds > 0.0) gs = std::min(gs, ds);
      if (dt > 0.0) gt = std::min(gt, dt);
    }
  }
  return {gs, gt};
}

Eigen::Vector4d to_log(const MaternGPParams& p) {
  return {std::log(p.lambda_s), std::log(p.lambda_t), std::log(p.amplitude),
          std::log(p.nugget)};
}

MaternGPParams from_log(const Eigen::Vector4d& x) {
  return {std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3])};
}

}  // namespace

double matern15(double r, double amplitude) {
  return amplitude * matern15_correlation(r);
}

GpNll gp_nll(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& responses,
             const MaternGPParams& params, bool with_gradient) {
  const Index m = coords.rows();
  const Index d = coords.cols() - 1;
  if (responses.cols() != m) {
    throw data_error("gp_nll: responses and coordinates are misaligned");
  }
  const Index reps = responses.rows();
  const double ls2 = params.lambda_s * params.lambda_s;
  const double lt2 = params.lambda_t * params.lambda_t;

  Eigen::MatrixXd ds2(m, m), dt2(m, m), kernel(m, m);
  for (Index j = 0; j < m; ++j) {
    for (Index k = j; k < m; ++k) {
      const double s2 = (coords.row(j).head(d) - coords.row(k).head(d)).squaredNorm() / ls2;
      const double t = coords(j, d) - coords(k, d);
      const double t2 = t * t / lt2;
      ds2(j, k) = ds2(k, j) = s2;
      dt2(j, k) = dt2(k, j) = t2;
      kernel(j, k) = kernel(k, j) = matern15(std::sqrt(s2 + t2), params.amplitude);
    }
  }
  Eigen::MatrixXd cov = kernel;
  cov.diagonal().array() += params.nugget;

  GpNll out;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const double scale = cov.diagonal().mean();
  for (double jitter = 1e-8; llt.info() != Eigen::Success; jitter *= 10.0) {
    if (jitter > 1e-4) {
      throw numerical_error("gp_nll: covariance not positive definite after jitter 1e-4");
    }
    Eigen::MatrixXd bumped = cov;
    bumped.diagonal().array() += jitter * scale;
    llt.compute(bumped);
    out.jitter = jitter * scale;
  }
  const Eigen::MatrixXd& lower = llt.matrixLLT();
  const double logdet = 2.0 * lower.diagonal().array().log().sum();
  const Eigen::MatrixXd alpha = llt.solve(responses.transpose());  // m x reps
  const double quad = (responses.transpose().array() * alpha.array()).sum();
  out.value = 0.5 * quad + 0.5 * static_cast<double>(reps) * logdet +
              0.5 * static_cast<double>(reps * m) * kLog2Pi;
  if (!with_gradient) return out;

  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::MatrixXd w = static_cast<double>(reps) * inv - alpha * alpha.transpose();
  double g_ls = 0.0, g_lt = 0.0, g_amp = 0.0;
  for (Index j = 0; j < m; ++j) {
    for (Index k = 0; k < m; ++k) {
      const double r = std::sqrt(ds2(j, k) + dt2(j, k));
      const double base = 3.0 * params.amplitude * std::exp(-kSqrt3 * r);
      g_ls += w(j, k) * base * ds2(j, k);
      g_lt += w(j, k) * base * dt2(j, k);
      g_amp += w(j, k) * kernel(j, k);
    }
  }
  out.grad << 0.5 * g_ls, 0.5 * g_lt, 0.5 * g_amp, 0.5 * params.nugget * w.trace();
  return out;
}

ScaleFit fit_scales_once(const CoordinateSet& coords, const Eigen::MatrixXd& responses,
                         const LengthscaleConfig& config) {
  if (!coords.standardized()) {
    throw config_error("length-scale estimation requires standardized coordinates");
  }
  if (coords.temporal_scale_unidentifiable()) {
    throw data_error("temporal scale unidentifiable: time coordinate is constant");
  }
  const Index n_loc = coords.size();
  const Index n_rep = responses.rows();
  if (responses.cols() != n_loc) {
    throw data_error("responses and coordinates are misaligned");
  }
  if (config.n_points < 2 || config.n_replicates < 1 || config.epochs < 1) {
    throw config_error("length-scale config needs n_points >= 2, n_replicates >= 1, epochs >= 1");
  }
  auto rng = make_rng(config.seed, Stream::kSubsample, config.stream);
  ScaleFit fit;
  fit.location_subset = sample_without_replacement(n_loc, std::min(config.n_points, n_loc), rng);
  fit.replicate_subset =
      sample_without_replacement(n_rep, std::min(config.n_replicates, n_rep), rng);

  Eigen::MatrixXd sub_x(static_cast<Index>(fit.location_subset.size()), coords.values().cols());
  for (std::size_t k = 0; k < fit.location_subset.size(); ++k) {
    sub_x.row(static_cast<Index>(k)) = coords.values().row(fit.location_subset[k]);
  }
  Eigen::MatrixXd sub_y(static_cast<Index>(fit.replicate_subset.size()), sub_x.rows());
  for (std::size_t r = 0; r < fit.replicate_subset.size(); ++r) {
    for (std::size_t k = 0; k < fit.location_subset.size(); ++k) {
      sub_y(static_cast<Index>(r), static_cast<Index>(k)) =
          responses(fit.replicate_subset[r], fit.location_subset[k]);
    }
  }
  const Index time_col = sub_x.cols() - 1;
  if (sub_x.col(time_col).maxCoeff() == sub_x.col(time_col).minCoeff()) {
    throw data_error("temporal scale unidentifiable: sampled subset has a single time value");
  }

  const double var = std::max((sub_y.array() - sub_y.mean()).square().mean(), 1e-12);
  Eigen::Vector4d x = to_log({1.0, 1.0, 0.9 * var, 0.1 * var});
  Eigen::Vector4d m1 = Eigen::Vector4d::Zero();
  Eigen::Vector4d m2 = Eigen::Vector4d::Zero();
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double lr = config.learning_rate;
  double prev = std::numeric_limits<double>::quiet_NaN();

  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    const GpNll nll = gp_nll(sub_x, sub_y, from_log(x));
    if (!std::isfinite(nll.value) || !nll.grad.allFinite()) {
      std::string trace;
      for (const double v : fit.trace) trace += fmt::format(" {:.6g}", v);
      throw numerical_error(fmt::format(
          "length-scale optimizer diverged at epoch {}; trace:{}", epoch, trace));
    }
    fit.trace.push_back(nll.value);
    if (epoch > 1 && std::abs(nll.value - prev) <= config.tolerance * std::abs(prev)) break;
    prev = nll.value;

    m1 = kBeta1 * m1 + (1.0 - kBeta1) * nll.grad;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * nll.grad.cwiseProduct(nll.grad);
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(epoch));
    x.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
    x = x.cwiseMax(-20.0).cwiseMin(20.0);
    lr *= config.decay;
  }
  fit.params = from_log(x);

  const auto [gap_s, gap_t] = min_gaps(sub_x);
  fit.collapsed = matern15_correlation(gap_s / fit.params.lambda_s) < 0.05 ||
                  matern15_correlation(gap_t / fit.params.lambda_t) < 0.05;
  return fit;
}

ScaleEstimate estimate_scales(const CoordinateSet& coords, const Eigen::MatrixXd& responses,
                              const LengthscaleConfig& config, int repeats, int threads) {
  if (repeats < 1) throw config_error("estimate_scales needs at least one repeat");
  std::vector<std::optional<ScaleFit>> fits(static_cast<std::size_t>(repeats));
  std::vector<std::string> errors(static_cast<std::size_t>(repeats));
  std::vector<std::exception_ptr> raised(static_cast<std::size_t>(repeats));
  parallel_for(static_cast<std::size_t>(repeats), threads, [&](std::size_t k) {
    LengthscaleConfig cfg = config;
    cfg.stream = k;
    try {
      fits[k] = fit_scales_once(coords, responses, cfg);
    } catch (const std::exception& e) {
      errors[k] = e.what();
      raised[k] = std::current_exception();
    }
  });

  ScaleEstimate out;
  std::vector<double> ls, lt;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (!fits[k]) {
      out.warnings.push_back(fmt::format("length-scale repeat {} failed: {}", k + 1, errors[k]));
      continue;
    }
    if (fits[k]->collapsed) {
      out.warnings.push_back(fmt::format(
          "length-scale repeat {}: estimates collapsed below the sampling resolution", k + 1));
    }
    ls.push_back(fits[k]->params.lambda_s);
    lt.push_back(fits[k]->params.lambda_t);
    out.repeats.push_back(std::move(*fits[k]));
  }
  if (out.repeats.empty()) std::rethrow_exception(raised.front());

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto std_error = [](const std::vector<double>& v, double mu) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (const double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) /
           std::sqrt(static_cast<double>(v.size()));
  };
  const double mean_s = mean(ls);
  const double mean_t = mean(lt);
  out.scaling = ScalingParams(mean_s, mean_t);
  out.se_lambda_s = std_error(ls, mean_s);
  out.se_lambda_t = std_error(lt, mean_t);
  return out;
}

}  // namespace stargp
