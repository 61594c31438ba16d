#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "evobj/common.hpp"

namespace evobj {

// Exact 3-d KD-tree. Nearest-neighbour ties resolve to the lowest point
// index, and pruning is non-strict, so results are identical to a linear
// scan with the same tie rule.
class KdTree {
 public:
  struct Hit {
    std::uint32_t index;
    double distance;
  };

  KdTree() = default;

  explicit KdTree(std::vector<Vec3> points) : pts_(std::move(points)) {
    order_.resize(pts_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(pts_.size() / kLeafSize * 2 + 2);
    if (!pts_.empty()) root_ = build(0, static_cast<std::uint32_t>(pts_.size()));
  }

  bool empty() const { return pts_.empty(); }
  std::size_t size() const { return pts_.size(); }
  const std::vector<Vec3>& points() const { return pts_; }

  Hit nearest(const Vec3& q) const {
    Best best;
    search(root_, q, best);
    return {best.index, std::sqrt(best.d2)};
  }

  // k nearest points sorted by (distance, index). Returns fewer than k when
  // the tree is smaller. skip_index excludes one point (for self-queries).
  std::vector<Hit> knn(const Vec3& q, std::uint32_t k,
                       std::uint32_t skip_index = std::numeric_limits<std::uint32_t>::max()) const {
    KnnHeap heap(k, skip_index);
    search_knn(root_, q, heap);
    std::vector<Hit> out;
    out.reserve(heap.entries.size());
    std::sort(heap.entries.begin(), heap.entries.end());
    for (const auto& e : heap.entries) out.push_back({e.second, std::sqrt(e.first)});
    return out;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 12;
  static constexpr std::int32_t kNone = -1;

  struct Node {
    double split = 0.0;
    std::int32_t left = kNone, right = kNone;
    std::uint32_t begin = 0, end = 0;  // leaf range into order_
    std::int8_t axis = -1;             // -1 marks a leaf
  };

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::uint32_t index = 0;

    void offer(double d2c, std::uint32_t idx) {
      if (d2c < d2 || (d2c == d2 && idx < index)) {
        d2 = d2c;
        index = idx;
      }
    }
  };

  struct KnnHeap {
    // max-heap on (d2, index); worst element first
    std::vector<std::pair<double, std::uint32_t>> entries;
    std::uint32_t k;
    std::uint32_t skip;

    KnnHeap(std::uint32_t k_, std::uint32_t skip_) : k(k_), skip(skip_) {}

    double bound() const {
      return entries.size() < k ? std::numeric_limits<double>::infinity() : entries.front().first;
    }

    void offer(double d2c, std::uint32_t idx) {
      if (idx == skip) return;
      const std::pair<double, std::uint32_t> cand{d2c, idx};
      if (entries.size() < k) {
        entries.push_back(cand);
        std::push_heap(entries.begin(), entries.end());
      } else if (cand < entries.front()) {
        std::pop_heap(entries.begin(), entries.end());
        entries.back() = cand;
        std::push_heap(entries.begin(), entries.end());
      }
    }
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-lo.x, -lo.y, -lo.z};
    for (std::uint32_t i = begin; i < end; ++i) {
      const Vec3& p = pts_[order_[i]];
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y > ext[axis]) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    if (ext[axis] <= 0.0) return id;  // all points coincide; stay a leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double va = pts_[a][axis], vb = pts_[b][axis];
                       return va < vb || (va == vb && a < b);
                     });
    nodes_[id].axis = static_cast<std::int8_t>(axis);
    nodes_[id].split = pts_[order_[mid]][axis];
    const std::int32_t l = build(begin, mid);
    const std::int32_t r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(std::int32_t id, const Vec3& q, Best& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        best.offer(dist2(q, pts_[idx]), idx);
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta <= best.d2) search(far, q, best);
  }

  void search_knn(std::int32_t id, const Vec3& q, KnnHeap& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        heap.offer(dist2(q, pts_[idx]), idx);
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search_knn(near, q, heap);
    if (delta * delta <= heap.bound()) search_knn(far, q, heap);
  }

  std::vector<Vec3> pts_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = kNone;
};

}  // namespace evobj
