#include "stargp/ordering.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "stargp/error.hpp"
#include "stargp/kdtree.hpp"

namespace stargp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr double kCentroidTieTolerance = 1e-10;

// Mean squared distance to the centroid, the natural scale for tie checks.
double centroid_scale(const PointCloud& cloud, const std::vector<double>& centroid) {
  double acc = 0.0;
  for (Index i = 0; i < cloud.size(); ++i) acc += cloud.squared_distance(i, centroid.data());
  return acc / static_cast<double>(cloud.size());
}

Index nearest_to_centroid(const PointCloud& cloud) {
  const Index dim = cloud.dim();
  std::vector<double> centroid(static_cast<std::size_t>(dim), 0.0);
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index k = 0; k < dim; ++k) centroid[static_cast<std::size_t>(k)] += cloud.point(i)[k];
  }
  for (double& c : centroid) c /= static_cast<double>(cloud.size());
  // The centroid carries rounding error, so points equidistant from it in
  // exact arithmetic can differ in the last bits; treat near-ties as ties so
  // the lowest index wins regardless of coordinate scaling.
  std::vector<double> d2(static_cast<std::size_t>(cloud.size()));
  double best_d2 = kInf;
  for (Index i = 0; i < cloud.size(); ++i) {
    d2[static_cast<std::size_t>(i)] = cloud.squared_distance(i, centroid.data());
    best_d2 = std::min(best_d2, d2[static_cast<std::size_t>(i)]);
  }
  const double cutoff = best_d2 + kCentroidTieTolerance * (best_d2 + centroid_scale(cloud, centroid));
  for (Index i = 0; i < cloud.size(); ++i) {
    if (d2[static_cast<std::size_t>(i)] <= cutoff) return i;
  }
  return 0;
}

struct HeapEntry {
  double d2;
  Index id;
};

// Max-heap on distance; among equal distances the lowest index is on top.
struct HeapLess {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    return a.id > b.id;
  }
};

Eigen::MatrixXd rows_in_order(const Eigen::MatrixXd& scaled,
                              const std::vector<Index>& perm) {
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.row(static_cast<Index>(i)) = scaled.row(perm[i]);
  }
  return out;
}

void check_perm(const std::vector<Index>& perm, Index n) {
  if (static_cast<Index>(perm.size()) != n) {
    throw data_error(fmt::format("permutation has {} entries for {} points",
                                 perm.size(), n));
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const Index p : perm) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) {
      throw data_error("ordering permutation is not a bijection");
    }
    seen[static_cast<std::size_t>(p)] = 1;
  }
}

}  // namespace

std::string to_string(OrderingKind kind) {
  return kind == OrderingKind::kMaximin ? "maximin" : "time";
}

OrderingKind ordering_kind_from_string(const std::string& name) {
  if (name == "maximin") return OrderingKind::kMaximin;
  if (name == "time") return OrderingKind::kTime;
  throw config_error(fmt::format("unknown ordering '{}' (expected maximin|time)", name));
}

MaximinResult maximin_order(const Eigen::MatrixXd& scaled) {
  const Index n = scaled.rows();
  MaximinResult out;
  if (n == 0) return out;
  const PointCloud cloud(scaled);
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  const KdTree tree(cloud, all);

  std::vector<double> cur(static_cast<std::size_t>(n), kInf);
  std::vector<char> selected(static_cast<std::size_t>(n), 0);
  out.perm.reserve(static_cast<std::size_t>(n));
  out.min_dist.reserve(static_cast<std::size_t>(n));

  const Index first = nearest_to_centroid(cloud);
  selected[static_cast<std::size_t>(first)] = 1;
  out.perm.push_back(first);
  out.min_dist.push_back(kInf);

  std::vector<HeapEntry> storage;
  storage.reserve(static_cast<std::size_t>(2 * n));
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap(
      HeapLess{}, std::move(storage));
  const double* fp = cloud.point(first);
  for (Index q = 0; q < n; ++q) {
    if (q == first) continue;
    cur[static_cast<std::size_t>(q)] = cloud.squared_distance(q, fp);
    heap.push({cur[static_cast<std::size_t>(q)], q});
  }

  while (static_cast<Index>(out.perm.size()) < n) {
    const HeapEntry top = heap.top();
    heap.pop();
    const auto t = static_cast<std::size_t>(top.id);
    if (selected[t] || top.d2 != cur[t]) continue;
    selected[t] = 1;
    out.perm.push_back(top.id);
    out.min_dist.push_back(std::sqrt(top.d2));
    tree.radius(cloud.point(top.id), top.d2, [&](Index q, double d2) {
      const auto qq = static_cast<std::size_t>(q);
      if (!selected[qq] && d2 < cur[qq]) {
        cur[qq] = d2;
        heap.push({d2, q});
      }
    });
  }
  return out;
}

MaximinResult maximin_order_exhaustive(const Eigen::MatrixXd& scaled) {
  const Index n = scaled.rows();
  MaximinResult out;
  if (n == 0) return out;
  const PointCloud cloud(scaled);
  std::vector<double> cur(static_cast<std::size_t>(n), kInf);
  std::vector<char> selected(static_cast<std::size_t>(n), 0);
  Index next = nearest_to_centroid(cloud);
  double next_d2 = kInf;
  for (Index step = 0; step < n; ++step) {
    selected[static_cast<std::size_t>(next)] = 1;
    out.perm.push_back(next);
    out.min_dist.push_back(step == 0 ? kInf : std::sqrt(next_d2));
    const double* p = cloud.point(next);
    Index best = -1;
    double best_d2 = -1.0;
    for (Index q = 0; q < n; ++q) {
      const auto qq = static_cast<std::size_t>(q);
      if (selected[qq]) continue;
      cur[qq] = std::min(cur[qq], cloud.squared_distance(q, p));
      if (cur[qq] > best_d2) {
        best_d2 = cur[qq];
        best = q;
      }
    }
    next = best;
    next_d2 = best_d2;
  }
  return out;
}

std::vector<Index> time_order(const Eigen::MatrixXd& scaled) {
  const Index n = scaled.rows();
  const Index time_col = scaled.cols() - 1;
  if (time_col < 1) throw data_error("time_order needs spatial and time columns");
  std::map<double, std::vector<Index>> frames;
  for (Index i = 0; i < n; ++i) frames[scaled(i, time_col)].push_back(i);

  std::vector<Index> perm;
  perm.reserve(static_cast<std::size_t>(n));
  for (const auto& [time, members] : frames) {
    Eigen::MatrixXd spatial(static_cast<Index>(members.size()), time_col);
    for (std::size_t k = 0; k < members.size(); ++k) {
      spatial.row(static_cast<Index>(k)) = scaled.row(members[k]).head(time_col);
    }
    const MaximinResult local = maximin_order(spatial);
    for (const Index j : local.perm) perm.push_back(members[static_cast<std::size_t>(j)]);
  }
  return perm;
}

double diameter_exhaustive(const Eigen::MatrixXd& scaled) {
  const PointCloud cloud(scaled);
  double best = 0.0;
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index j = i + 1; j < cloud.size(); ++j) {
      best = std::max(best, cloud.squared_distance(j, cloud.point(i)));
    }
  }
  return std::sqrt(best);
}

double diameter(const Eigen::MatrixXd& scaled) {
  const Index n = scaled.rows();
  if (n < 2) return 0.0;
  const PointCloud cloud(scaled);
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  const KdTree tree(cloud, all);

  // Double sweep gives a strong initial lower bound.
  auto farthest_from = [&](Index i) {
    Index arg = i;
    double best = -1.0;
    for (Index j = 0; j < n; ++j) {
      const double d2 = cloud.squared_distance(j, cloud.point(i));
      if (d2 > best) {
        best = d2;
        arg = j;
      }
    }
    return std::pair{arg, best};
  };
  const auto [a, da] = farthest_from(0);
  double best = std::max(da, farthest_from(a).second);
  for (Index i = 0; i < n; ++i) best = tree.farthest_beyond(cloud.point(i), best);
  return std::sqrt(best);
}

NeighborSets neighbor_sets_exhaustive(const Eigen::MatrixXd& scaled,
                                      const std::vector<Index>& perm, Index m) {
  if (m < 1) throw config_error("neighbor count m must be >= 1");
  const Index n = scaled.rows();
  check_perm(perm, n);
  const PointCloud cloud(rows_in_order(scaled, perm));
  NeighborSets out;
  out.neighbors.resize(static_cast<std::size_t>(n));
  out.l.assign(static_cast<std::size_t>(n), 0.0);
  for (Index i = 1; i < n; ++i) {
    KnnResult result(std::min(m, i));
    const double* q = cloud.point(i);
    for (Index j = 0; j < i; ++j) {
      result.offer({cloud.squared_distance(j, q), perm[static_cast<std::size_t>(j)], j});
    }
    auto sorted = result.take_sorted();
    auto& nb = out.neighbors[static_cast<std::size_t>(i)];
    nb.reserve(sorted.size());
    for (const auto& c : sorted) nb.push_back(c.id);
    out.l[static_cast<std::size_t>(i)] = std::sqrt(sorted.front().d2);
  }
  if (n > 0) out.l[0] = diameter_exhaustive(scaled);
  return out;
}

NeighborSets neighbor_sets(const Eigen::MatrixXd& scaled,
                           const std::vector<Index>& perm, Index m) {
  if (m < 1) throw config_error("neighbor count m must be >= 1");
  const Index n = scaled.rows();
  check_perm(perm, n);
  const PointCloud cloud(rows_in_order(scaled, perm));
  NeighborSets out;
  out.neighbors.resize(static_cast<std::size_t>(n));
  out.l.assign(static_cast<std::size_t>(n), 0.0);
  IncrementalKnnIndex index(cloud, &perm);
  for (Index i = 0; i < n; ++i) {
    if (i > 0) {
      KnnResult result(std::min(m, i));
      index.knn(cloud.point(i), result);
      auto sorted = result.take_sorted();
      auto& nb = out.neighbors[static_cast<std::size_t>(i)];
      nb.reserve(sorted.size());
      for (const auto& c : sorted) nb.push_back(c.id);
      out.l[static_cast<std::size_t>(i)] = std::sqrt(sorted.front().d2);
    }
    index.insert(i);
  }
  if (n > 0) out.l[0] = diameter(scaled);
  return out;
}

Ordering build_ordering(const Eigen::MatrixXd& scaled, OrderingKind kind, Index m) {
  if (scaled.rows() < 1) throw data_error("cannot order an empty coordinate set");
  Ordering out;
  out.kind = kind;
  out.m = m;
  out.perm = kind == OrderingKind::kMaximin ? maximin_order(scaled).perm
                                            : time_order(scaled);
  NeighborSets sets = neighbor_sets(scaled, out.perm, m);
  out.neighbors = std::move(sets.neighbors);
  out.l = std::move(sets.l);
  return out;
}

Ordering with_neighbor_count(const Ordering& base, const Eigen::MatrixXd& scaled,
                             Index m) {
  Ordering out;
  out.kind = base.kind;
  out.m = m;
  out.perm = base.perm;
  NeighborSets sets = neighbor_sets(scaled, out.perm, m);
  out.neighbors = std::move(sets.neighbors);
  out.l = std::move(sets.l);
  return out;
}

void validate_ordering(const Ordering& ordering) {
  const Index n = ordering.size();
  check_perm(ordering.perm, n);
  if (static_cast<Index>(ordering.neighbors.size()) != n ||
      static_cast<Index>(ordering.l.size()) != n) {
    throw data_error("ordering arrays have inconsistent lengths");
  }
  for (Index i = 0; i < n; ++i) {
    const auto& nb = ordering.neighbors[static_cast<std::size_t>(i)];
    if (static_cast<Index>(nb.size()) != std::min(ordering.m, i)) {
      throw data_error(fmt::format("conditioning set {} has {} entries, expected {}",
                                   i + 1, nb.size(), std::min(ordering.m, i)));
    }
    for (const Index j : nb) {
      if (j < 0 || j >= i) {
        throw data_error(fmt::format("conditioning set {} references non-predecessor {}",
                                     i + 1, j + 1));
      }
    }
    if (!(ordering.l[static_cast<std::size_t>(i)] > 0.0) && n > 1) {
      throw data_error(fmt::format("non-positive nearest-neighbor distance at {}", i + 1));
    }
  }
}

}  // namespace stargp
