#include "kdtree.hpp"

#include "pls/graph.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <numeric>
#include <queue>

namespace pls::detail {

KdTree::KdTree(const Matrix& points, std::size_t leaf_size)
    : points_(points), dim_(static_cast<std::size_t>(points.cols())),
      leaf_size_(std::max<std::size_t>(1, leaf_size)),
      order_(static_cast<std::size_t>(points.rows())) {
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(2 * order_.size() / leaf_size_ + 1);
  if (!order_.empty()) build(0, order_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  {
    Node& node = nodes_.back();
    node.begin = begin;
    node.end = end;
    node.lo.assign(dim_, std::numeric_limits<double>::infinity());
    node.hi.assign(dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t k = begin; k < end; ++k) {
      const double* p = points_.row(static_cast<Eigen::Index>(order_[k])).data();
      for (std::size_t j = 0; j < dim_; ++j) {
        node.lo[j] = std::min(node.lo[j], p[j]);
        node.hi[j] = std::max(node.hi[j], p[j]);
      }
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double w = nodes_[id].hi[j] - nodes_[id].lo[j];
    if (w > widest) {
      widest = w;
      axis = j;
    }
  }
  if (widest <= 0.0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](Index a, Index b) {
                     const double va = points_(static_cast<Eigen::Index>(a),
                                               static_cast<Eigen::Index>(axis));
                     const double vb = points_(static_cast<Eigen::Index>(b),
                                               static_cast<Eigen::Index>(axis));
                     return va < vb || (va == vb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_distance(const Node& node, const double* q) const {
  double sum = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    double diff = 0.0;
    if (q[j] < node.lo[j])
      diff = node.lo[j] - q[j];
    else if (q[j] > node.hi[j])
      diff = q[j] - node.hi[j];
    sum += diff * diff;
  }
  return sum;
}

std::vector<KdTree::Neighbor> KdTree::nearest(Index query, std::size_t k) const {
  std::vector<Neighbor> heap;  // max-heap on (distance, index)
  heap.reserve(k + 1);
  if (k == 0 || nodes_.empty()) return heap;
  const auto qrow = points_.row(static_cast<Eigen::Index>(query));
  const double* q = qrow.data();
  const std::span<const double> qs(q, dim_);

  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (heap.size() == k && box_distance(node, q) > heap.front().first) continue;
    if (node.left < 0) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const Index j = order_[t];
        if (j == query) continue;
        const double d2 = squared_distance(
            qs, std::span<const double>(points_.row(static_cast<Eigen::Index>(j)).data(), dim_));
        const Neighbor cand{d2, j};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_distance(l, q);
    const double dr = box_distance(r, q);
    // Push the farther child first so the nearer one is explored next.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

std::vector<KdTree::Neighbor> KdTree::within(Index query, double squared_bound) const {
  std::vector<Neighbor> out;
  if (nodes_.empty()) return out;
  const double* q = points_.row(static_cast<Eigen::Index>(query)).data();
  const std::span<const double> qs(q, dim_);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_distance(node, q) >= squared_bound) continue;
    if (node.left < 0) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const Index j = order_[t];
        if (j == query) continue;
        const double d2 = squared_distance(
            qs, std::span<const double>(points_.row(static_cast<Eigen::Index>(j)).data(), dim_));
        if (d2 < squared_bound) out.emplace_back(d2, j);
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.second < b.second;
  });
  return out;
}

}  // namespace pls::detail
