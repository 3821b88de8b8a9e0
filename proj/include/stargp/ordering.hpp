#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace stargp {

using Eigen::Index;

enum class OrderingKind { kMaximin, kTime };

std::string to_string(OrderingKind kind);
OrderingKind ordering_kind_from_string(const std::string& name);

/// Result of a maximin pass: order plus the min distance of each point to
/// its predecessors at selection (entry 0 is unused and set to +inf).
struct MaximinResult {
  std::vector<Index> perm;
  std::vector<double> min_dist;
};

/// Greedy maximin over rows of `scaled`. The first point is the one nearest
/// the centroid; every tie goes to the lowest row index. Uses a k-d tree with
/// lazy max-heap updates.
MaximinResult maximin_order(const Eigen::MatrixXd& scaled);

/// O(N^2) reference implementation with the same contract.
MaximinResult maximin_order_exhaustive(const Eigen::MatrixXd& scaled);

/// Sorts by time (last column of `scaled`), then orders each frame by spatial
/// maximin over the remaining columns.
std::vector<Index> time_order(const Eigen::MatrixXd& scaled);

/// Conditioning sets for a fixed permutation. neighbors[i] holds up to m
/// predecessor positions (all < i) sorted by ascending scaled distance, ties
/// by lowest original index. l[i] is the distance to the nearest predecessor
/// and l[0] is the domain diameter.
struct NeighborSets {
  std::vector<std::vector<Index>> neighbors;
  std::vector<double> l;
};

NeighborSets neighbor_sets_exhaustive(const Eigen::MatrixXd& scaled,
                                      const std::vector<Index>& perm, Index m);

/// Same contract as neighbor_sets_exhaustive using an incrementally grown
/// exact k-d index over predecessors.
NeighborSets neighbor_sets(const Eigen::MatrixXd& scaled,
                           const std::vector<Index>& perm, Index m);

/// Largest pairwise Euclidean distance between rows; branch-and-bound over a
/// k-d tree, exact.
double diameter(const Eigen::MatrixXd& scaled);
double diameter_exhaustive(const Eigen::MatrixXd& scaled);

struct Ordering {
  OrderingKind kind = OrderingKind::kMaximin;
  Index m = 0;
  std::vector<Index> perm;  // position -> original index
  std::vector<double> l;
  std::vector<std::vector<Index>> neighbors;

  Index size() const { return static_cast<Index>(perm.size()); }
};

Ordering build_ordering(const Eigen::MatrixXd& scaled, OrderingKind kind, Index m);

/// Re-derives conditioning sets for a new m without reordering.
Ordering with_neighbor_count(const Ordering& base, const Eigen::MatrixXd& scaled,
                             Index m);

/// Structural checks shared by tests and model loading: bijective perm,
/// predecessor-only sorted sets of size min(m, i).
void validate_ordering(const Ordering& ordering);

}  // namespace stargp
