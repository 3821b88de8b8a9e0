#include "stargp/sampling.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "stargp/error.hpp"
#include "stargp/parallel.hpp"
#include "stargp/random.hpp"

namespace stargp {

namespace {

constexpr double kNegativeVarianceTolerance = 1e-9;

// Draws positions [first, N) of one standardized trajectory in place.
void draw_sequential(const FittedMap& map, Index first, Eigen::VectorXd& z,
                     std::mt19937_64& rng) {
  const Index n_points = map.size();
  Eigen::VectorXd nb_values;
  for (Index i = first; i < n_points; ++i) {
    const auto& nb = map.ordering.neighbors[static_cast<std::size_t>(i)];
    nb_values.resize(static_cast<Index>(nb.size()));
    for (std::size_t k = 0; k < nb.size(); ++k) nb_values[static_cast<Index>(k)] = z[nb[k]];
    z[i] = t_sample(predictive_params(map, i, nb_values), rng);
  }
}

Eigen::RowVectorXd to_raw_original(const FittedMap& map, const Eigen::VectorXd& z) {
  Eigen::RowVectorXd out(map.size());
  const auto& stats = map.response_stats;
  for (Index i = 0; i < map.size(); ++i) {
    const Index orig = map.ordering.perm[static_cast<std::size_t>(i)];
    out[orig] = stats.mean[orig] + stats.sd[orig] * z[i];
  }
  return out;
}

}  // namespace

PredictiveParams predictive_params(const FittedMap& map, Index i,
                                   const Eigen::Ref<const Eigen::VectorXd>& neighbor_values) {
  if (i < 0 || i >= map.size()) {
    throw data_error(fmt::format("predictive_params: position {} out of range", i + 1));
  }
  const auto& nb = map.ordering.neighbors[static_cast<std::size_t>(i)];
  if (neighbor_values.size() != static_cast<Index>(nb.size())) {
    throw data_error(fmt::format("predictive_params: {} neighbor values for a set of size {}",
                                 neighbor_values.size(), nb.size()));
  }
  const TermCache& cache = map.caches[static_cast<std::size_t>(i)];
  PredictiveParams out;
  out.nu = 2.0 * cache.alpha_tilde;
  const double d2 = cache.beta_tilde / cache.alpha_tilde;
  if (nb.empty()) {
    out.scale2 = d2;
    return out;
  }
  const PriorSpec prior = map.prior(i);
  const Eigen::MatrixXd a = neighbor_matrix(map.train, map.ordering, i);
  const Eigen::VectorXd kstar = cross_kernel(neighbor_values, a, prior);
  out.mu = kstar.dot(cache.solved);
  const Eigen::VectorXd w =
      cache.chol.triangularView<Eigen::Lower>().solve(kstar);
  double v = kernel_eval(neighbor_values, neighbor_values, prior) - w.squaredNorm();
  if (v < 0.0) {
    if (v < -kNegativeVarianceTolerance) {
      throw numerical_error(
          fmt::format("predictive variance {} at position {} is negative", v, i + 1));
    }
    v = 0.0;
  }
  out.scale2 = d2 * (v + 1.0);
  return out;
}

double t_logpdf(double y, const PredictiveParams& p) {
  const double z2 = (y - p.mu) * (y - p.mu) / (p.nu * p.scale2);
  return std::lgamma(0.5 * (p.nu + 1.0)) - std::lgamma(0.5 * p.nu) -
         0.5 * std::log(p.nu * std::numbers::pi * p.scale2) -
         0.5 * (p.nu + 1.0) * std::log1p(z2);
}

double t_sample(const PredictiveParams& p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(p.nu);
  const double z = normal(rng);
  const double c = chi2(rng);
  return p.mu + std::sqrt(p.scale2) * z / std::sqrt(c / p.nu);
}

Eigen::MatrixXd sample_unconditional(const FittedMap& map, Index n_samples, std::uint64_t seed,
                                     int threads) {
  if (n_samples < 0) throw config_error("sample count must be non-negative");
  Eigen::MatrixXd out(n_samples, map.size());
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t s) {
    auto rng = make_rng(seed, Stream::kSample, s);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(map.size());
    draw_sequential(map, 0, z, rng);
    out.row(static_cast<Index>(s)) = to_raw_original(map, z);
  });
  return out;
}

Index observed_count_for_cutoff(const FittedMap& map, double cutoff) {
  if (map.ordering.kind != OrderingKind::kTime) {
    throw config_error("forecasting requires a time-ordered model; this model uses maximin ordering");
  }
  const Index time_col = map.raw_coords.cols() - 1;
  Index count = 0;
  bool passed = false;
  for (Index i = 0; i < map.size(); ++i) {
    const double t = map.raw_coords(map.ordering.perm[static_cast<std::size_t>(i)], time_col);
    if (t <= cutoff) {
      if (passed) {
        throw data_error(fmt::format("cutoff {} does not fall on a frame boundary", cutoff));
      }
      ++count;
    } else {
      passed = true;
    }
  }
  return count;
}

Eigen::MatrixXd forecast(const FittedMap& map, const Eigen::VectorXd& observed, Index n_observed,
                         Index n_samples, std::uint64_t seed, int threads) {
  if (map.ordering.kind != OrderingKind::kTime) {
    throw config_error("forecasting requires a time-ordered model; this model uses maximin ordering");
  }
  const Index n_points = map.size();
  if (observed.size() != n_points) {
    throw data_error(fmt::format("observed trajectory has {} entries, model has {}",
                                 observed.size(), n_points));
  }
  if (n_observed < 0 || n_observed > n_points) {
    throw config_error(fmt::format("observed prefix length {} out of range", n_observed));
  }
  const Index time_col = map.raw_coords.cols() - 1;
  if (n_observed > 0 && n_observed < n_points) {
    const double t_last =
        map.raw_coords(map.ordering.perm[static_cast<std::size_t>(n_observed - 1)], time_col);
    const double t_next =
        map.raw_coords(map.ordering.perm[static_cast<std::size_t>(n_observed)], time_col);
    if (t_last == t_next) {
      throw data_error("observed prefix does not end on a frame boundary");
    }
  }
  if (n_samples < 0) throw config_error("sample count must be non-negative");
  Eigen::VectorXd prefix(n_observed);
  for (Index i = 0; i < n_observed; ++i) {
    const Index orig = map.ordering.perm[static_cast<std::size_t>(i)];
    if (!std::isfinite(observed[orig])) {
      throw data_error(fmt::format("observed value at index {} is not finite", orig + 1));
    }
    prefix[i] = (observed[orig] - map.response_stats.mean[orig]) / map.response_stats.sd[orig];
  }
  Eigen::MatrixXd out(n_samples, n_points);
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t s) {
    auto rng = make_rng(seed, Stream::kSample, s);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_points);
    z.head(n_observed) = prefix;
    draw_sequential(map, n_observed, z, rng);
    Eigen::RowVectorXd row = to_raw_original(map, z);
    for (Index i = 0; i < n_observed; ++i) {
      const Index orig = map.ordering.perm[static_cast<std::size_t>(i)];
      row[orig] = observed[orig];
    }
    out.row(static_cast<Index>(s)) = row;
  });
  return out;
}

LogScore logscore(const FittedMap& map, const Eigen::MatrixXd& test, int threads) {
  if (test.cols() != map.size()) {
    throw data_error(fmt::format("test replicates have {} columns, model has {}", test.cols(),
                                 map.size()));
  }
  if (test.rows() < 1) throw data_error("logscore needs at least one test replicate");
  const Eigen::MatrixXd z =
      align_to_ordering(standardize_responses(test, map.response_stats), map.ordering.perm);
  const double jacobian = map.response_stats.sd.array().log().sum();
  LogScore out;
  out.per_replicate.resize(static_cast<std::size_t>(test.rows()));
  parallel_for(static_cast<std::size_t>(test.rows()), threads, [&](std::size_t r) {
    const Eigen::VectorXd row = z.row(static_cast<Index>(r)).transpose();
    Eigen::VectorXd nb_values;
    double total = 0.0;
    for (Index i = 0; i < map.size(); ++i) {
      const auto& nb = map.ordering.neighbors[static_cast<std::size_t>(i)];
      nb_values.resize(static_cast<Index>(nb.size()));
      for (std::size_t k = 0; k < nb.size(); ++k) nb_values[static_cast<Index>(k)] = row[nb[k]];
      total -= t_logpdf(row[i], predictive_params(map, i, nb_values));
    }
    out.per_replicate[r] = total + jacobian;
  });
  double sum = 0.0;
  for (const double v : out.per_replicate) sum += v;
  out.average = sum / static_cast<double>(out.per_replicate.size());
  return out;
}

}  // namespace stargp
