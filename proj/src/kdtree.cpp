#include "stargp/kdtree.hpp"

#include <algorithm>
#include <limits>

namespace stargp {

namespace {
constexpr Index kLeafSize = 16;
}

PointCloud::PointCloud(const Eigen::MatrixXd& points)
    : data_(static_cast<std::size_t>(points.size())),
      size_(points.rows()),
      dim_(points.cols()) {
  for (Index i = 0; i < size_; ++i) {
    for (Index k = 0; k < dim_; ++k) {
      data_[static_cast<std::size_t>(i * dim_ + k)] = points(i, k);
    }
  }
}

double PointCloud::squared_distance(Index i, const double* q) const {
  const double* p = point(i);
  double acc = 0.0;
  for (Index k = 0; k < dim_; ++k) {
    const double diff = p[k] - q[k];
    acc += diff * diff;
  }
  return acc;
}

void KnnResult::offer(const Candidate& c) {
  if (k_ <= 0) return;
  if (!full()) {
    heap_.push_back(c);
    std::push_heap(heap_.begin(), heap_.end(), candidate_less);
    return;
  }
  if (candidate_less(c, heap_.front())) {
    std::pop_heap(heap_.begin(), heap_.end(), candidate_less);
    heap_.back() = c;
    std::push_heap(heap_.begin(), heap_.end(), candidate_less);
  }
}

std::vector<Candidate> KnnResult::take_sorted() {
  std::sort_heap(heap_.begin(), heap_.end(), candidate_less);
  return std::move(heap_);
}

KdTree::KdTree(const PointCloud& cloud, std::vector<Index> ids,
               const std::vector<Index>* tie_keys)
    : cloud_(&cloud), tie_keys_(tie_keys), ids_(std::move(ids)) {
  if (ids_.empty()) return;
  nodes_.reserve(2 * ids_.size() / static_cast<std::size_t>(kLeafSize) + 2);
  build(0, static_cast<Index>(ids_.size()));
}

std::int32_t KdTree::build(Index begin, Index end) {
  const Index dim = cloud_->dim();
  const auto node = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{-1, -1, begin, end});
  lo_.resize(lo_.size() + static_cast<std::size_t>(dim),
             std::numeric_limits<double>::infinity());
  hi_.resize(hi_.size() + static_cast<std::size_t>(dim),
             -std::numeric_limits<double>::infinity());
  double* lo = lo_.data() + static_cast<std::size_t>(node) * dim;
  double* hi = hi_.data() + static_cast<std::size_t>(node) * dim;
  for (Index k = begin; k < end; ++k) {
    const double* p = cloud_->point(ids_[static_cast<std::size_t>(k)]);
    for (Index c = 0; c < dim; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  if (end - begin <= kLeafSize) return node;

  Index split_dim = 0;
  double widest = -1.0;
  for (Index c = 0; c < dim; ++c) {
    if (hi[c] - lo[c] > widest) {
      widest = hi[c] - lo[c];
      split_dim = c;
    }
  }
  if (widest <= 0.0) return node;  // all points coincide

  const Index mid = begin + (end - begin) / 2;
  std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                   [&](Index a, Index b) {
                     const double pa = cloud_->point(a)[split_dim];
                     const double pb = cloud_->point(b)[split_dim];
                     if (pa != pb) return pa < pb;
                     return a < b;
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(node)].left = left;
  nodes_[static_cast<std::size_t>(node)].right = right;
  return node;
}

double KdTree::min_d2(std::int32_t node, const double* q) const {
  const Index dim = cloud_->dim();
  const double* lo = lo_.data() + static_cast<std::size_t>(node) * dim;
  const double* hi = hi_.data() + static_cast<std::size_t>(node) * dim;
  double acc = 0.0;
  for (Index c = 0; c < dim; ++c) {
    double gap = 0.0;
    if (q[c] < lo[c]) {
      gap = lo[c] - q[c];
    } else if (q[c] > hi[c]) {
      gap = q[c] - hi[c];
    }
    acc += gap * gap;
  }
  return acc;
}

double KdTree::max_d2(std::int32_t node, const double* q) const {
  const Index dim = cloud_->dim();
  const double* lo = lo_.data() + static_cast<std::size_t>(node) * dim;
  const double* hi = hi_.data() + static_cast<std::size_t>(node) * dim;
  double acc = 0.0;
  for (Index c = 0; c < dim; ++c) {
    const double span = std::max(q[c] - lo[c], hi[c] - q[c]);
    acc += span * span;
  }
  return acc;
}

void KdTree::knn(const double* query, KnnResult& result) const {
  if (nodes_.empty()) return;
  knn_impl(0, query, result);
}

void KdTree::knn_impl(std::int32_t node, const double* q,
                      KnnResult& result) const {
  const Node& nd = nodes_[static_cast<std::size_t>(node)];
  if (nd.left < 0) {
    for (Index k = nd.begin; k < nd.end; ++k) {
      const Index id = ids_[static_cast<std::size_t>(k)];
      result.offer({cloud_->squared_distance(id, q), key_of(id), id});
    }
    return;
  }
  const double dl = min_d2(nd.left, q);
  const double dr = min_d2(nd.right, q);
  const std::int32_t first = dl <= dr ? nd.left : nd.right;
  const std::int32_t second = dl <= dr ? nd.right : nd.left;
  const double d_first = std::min(dl, dr);
  const double d_second = std::max(dl, dr);
  if (result.admits(d_first)) knn_impl(first, q, result);
  if (result.admits(d_second)) knn_impl(second, q, result);
}

double KdTree::farthest_beyond(const double* query, double floor) const {
  if (nodes_.empty()) return floor;
  return farthest_impl(0, query, floor);
}

double KdTree::farthest_impl(std::int32_t node, const double* q,
                             double best) const {
  if (max_d2(node, q) <= best) return best;
  const Node& nd = nodes_[static_cast<std::size_t>(node)];
  if (nd.left < 0) {
    for (Index k = nd.begin; k < nd.end; ++k) {
      best = std::max(best,
                      cloud_->squared_distance(ids_[static_cast<std::size_t>(k)], q));
    }
    return best;
  }
  const double ml = max_d2(nd.left, q);
  const double mr = max_d2(nd.right, q);
  if (ml >= mr) {
    best = farthest_impl(nd.left, q, best);
    best = farthest_impl(nd.right, q, best);
  } else {
    best = farthest_impl(nd.right, q, best);
    best = farthest_impl(nd.left, q, best);
  }
  return best;
}

IncrementalKnnIndex::IncrementalKnnIndex(const PointCloud& cloud,
                                         const std::vector<Index>* tie_keys)
    : cloud_(&cloud), tie_keys_(tie_keys) {
  buffer_.reserve(kBufferSize);
}

void IncrementalKnnIndex::insert(Index id) {
  buffer_.push_back(id);
  if (buffer_.size() < kBufferSize) return;
  std::vector<Index> carry = std::move(buffer_);
  buffer_.clear();
  buffer_.reserve(kBufferSize);
  std::size_t level = 0;
  while (true) {
    if (level == level_ids_.size()) {
      level_ids_.emplace_back();
      level_trees_.emplace_back();
    }
    if (level_ids_[level].empty()) {
      level_ids_[level] = carry;
      level_trees_[level] = std::make_unique<KdTree>(*cloud_, std::move(carry), tie_keys_);
      return;
    }
    carry.insert(carry.end(), level_ids_[level].begin(), level_ids_[level].end());
    level_ids_[level].clear();
    level_trees_[level].reset();
    ++level;
  }
}

void IncrementalKnnIndex::knn(const double* query, KnnResult& result) const {
  for (const Index id : buffer_) {
    const Index key = tie_keys_ ? (*tie_keys_)[static_cast<std::size_t>(id)] : id;
    result.offer({cloud_->squared_distance(id, query), key, id});
  }
  for (auto it = level_trees_.rbegin(); it != level_trees_.rend(); ++it) {
    if (*it) (*it)->knn(query, result);
  }
}

}  // namespace stargp
