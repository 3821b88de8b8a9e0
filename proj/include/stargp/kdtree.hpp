#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

namespace stargp {

using Eigen::Index;

/// Row-major copy of a point matrix, so one point is a contiguous slice.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(const Eigen::MatrixXd& points);

  Index size() const { return size_; }
  Index dim() const { return dim_; }
  const double* point(Index i) const {
    return data_.data() + static_cast<std::size_t>(i * dim_);
  }
  double squared_distance(Index i, const double* q) const;

 private:
  std::vector<double> data_;
  Index size_ = 0;
  Index dim_ = 0;
};

/// A neighbor candidate; ordering is (squared distance, tie key) so equal
/// distances resolve deterministically by the caller-supplied key.
struct Candidate {
  double d2;
  Index key;
  Index id;
};

inline bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  return a.key < b.key;
}

/// Keeps the k best candidates seen so far.
class KnnResult {
 public:
  explicit KnnResult(Index k) : k_(k) { heap_.reserve(static_cast<std::size_t>(k) + 1); }

  void offer(const Candidate& c);
  bool full() const { return static_cast<Index>(heap_.size()) >= k_; }
  /// Worst retained candidate; only meaningful when full().
  const Candidate& worst() const { return heap_.front(); }
  /// True if a node whose points are all at squared distance >= bound could
  /// still contribute.
  bool admits(double bound) const { return !full() || bound <= worst().d2; }
  /// Sorted ascending; consumes the result.
  std::vector<Candidate> take_sorted();

 private:
  Index k_;
  std::vector<Candidate> heap_;  // max-heap under candidate_less
};

/// Static k-d tree over a subset of a PointCloud.
class KdTree {
 public:
  KdTree(const PointCloud& cloud, std::vector<Index> ids,
         const std::vector<Index>* tie_keys = nullptr);

  Index size() const { return static_cast<Index>(ids_.size()); }

  void knn(const double* query, KnnResult& result) const;

  /// Calls visit(id, d2) for every point with d2 <= radius2.
  template <typename Visit>
  void radius(const double* query, double radius2, Visit&& visit) const {
    if (nodes_.empty()) return;
    radius_impl(0, query, radius2, visit);
  }

  /// Largest squared distance from `query` to any tree point if it exceeds
  /// `floor`; otherwise returns `floor`.
  double farthest_beyond(const double* query, double floor) const;

 private:
  struct Node {
    std::int32_t left = -1;
    std::int32_t right = -1;
    Index begin = 0;
    Index end = 0;
  };

  std::int32_t build(Index begin, Index end);
  double min_d2(std::int32_t node, const double* q) const;
  double max_d2(std::int32_t node, const double* q) const;
  void knn_impl(std::int32_t node, const double* q, KnnResult& result) const;
  double farthest_impl(std::int32_t node, const double* q, double best) const;

  template <typename Visit>
  void radius_impl(std::int32_t node, const double* q, double r2,
                   Visit& visit) const {
    if (min_d2(node, q) > r2) return;
    const Node& nd = nodes_[static_cast<std::size_t>(node)];
    if (nd.left < 0) {
      for (Index k = nd.begin; k < nd.end; ++k) {
        const Index id = ids_[static_cast<std::size_t>(k)];
        const double d2 = cloud_->squared_distance(id, q);
        if (d2 <= r2) visit(id, d2);
      }
      return;
    }
    radius_impl(nd.left, q, r2, visit);
    radius_impl(nd.right, q, r2, visit);
  }

  Index key_of(Index id) const {
    return tie_keys_ ? (*tie_keys_)[static_cast<std::size_t>(id)] : id;
  }

  const PointCloud* cloud_;
  const std::vector<Index>* tie_keys_;
  std::vector<Index> ids_;
  std::vector<Node> nodes_;
  std::vector<double> lo_;  // per-node bounding boxes, nodes x dim
  std::vector<double> hi_;
};

/// Exact nearest-neighbor index that grows by insertion (logarithmic method:
/// a brute-force buffer plus static trees of doubling sizes).
class IncrementalKnnIndex {
 public:
  IncrementalKnnIndex(const PointCloud& cloud, const std::vector<Index>* tie_keys);

  void insert(Index id);
  void knn(const double* query, KnnResult& result) const;

 private:
  static constexpr std::size_t kBufferSize = 64;

  const PointCloud* cloud_;
  const std::vector<Index>* tie_keys_;
  std::vector<Index> buffer_;
  std::vector<std::vector<Index>> level_ids_;
  std::vector<std::unique_ptr<KdTree>> level_trees_;
};

}  // namespace stargp
