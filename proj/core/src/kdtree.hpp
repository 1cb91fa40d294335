#pragma once

#include "pls/types.hpp"

#include <utility>
#include <vector>

namespace pls::detail {

/// Exact k-d tree over the rows of a row-major matrix. Results are ordered
/// by (squared distance, index), so equal distances resolve to the lower index.
class KdTree {
public:
  explicit KdTree(const Matrix& points, std::size_t leaf_size = 16);

  using Neighbor = std::pair<double, Index>;

  /// The k nearest points to row `query` of the indexed matrix, excluding it.
  std::vector<Neighbor> nearest(Index query, std::size_t k) const;

  /// All indices j != query with squared distance < bound (candidate filter;
  /// callers apply their own exact predicate).
  std::vector<Neighbor> within(Index query, double squared_bound) const;

private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    int left = -1, right = -1;
    std::vector<double> lo, hi;      // bounding box
  };

  int build(std::size_t begin, std::size_t end);
  double box_distance(const Node& node, const double* q) const;

  const Matrix& points_;
  std::size_t dim_;
  std::size_t leaf_size_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace pls::detail
