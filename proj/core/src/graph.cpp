#include "pls/graph.hpp"

#include "csv.hpp"
#include "kdtree.hpp"
#include "pls/error.hpp"
#include "pls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

namespace pls {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (Index i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) acc += values[p] * x[columns[p]];
    y[i] = acc;
  }
}

double CsrMatrix::at(Index i, Index j) const {
  const auto first = columns.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
  const auto last = columns.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - columns.begin())];
}

Matrix CsrMatrix::to_dense() const {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (Index i = 0; i < rows; ++i)
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(columns[p])) = values[p];
  return m;
}

Vector NeighborGraph::degrees() const {
  Vector deg = Vector::Zero(static_cast<Eigen::Index>(size()));
  for (Index i = 0; i < size(); ++i) {
    double acc = 0.0;
    for (std::size_t p = adjacency.row_begin(i); p < adjacency.row_end(i); ++p)
      acc += adjacency.values[p];
    deg(static_cast<Eigen::Index>(i)) = acc;
  }
  return deg;
}

Index NeighborGraph::isolated_count() const {
  Index count = 0;
  for (Index i = 0; i < size(); ++i)
    if (adjacency.row_begin(i) == adjacency.row_end(i)) ++count;
  return count;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return sum;
}

namespace {

struct Triplet {
  Index i, j;
  double w;
};

// Builds a CSR matrix from upper-triangle triplets (i < j, unique pairs),
// mirroring each entry.
CsrMatrix symmetric_csr(Index n, const std::vector<Triplet>& upper) {
  CsrMatrix m;
  m.rows = n;
  std::vector<std::size_t> counts(n, 0);
  for (const auto& t : upper) {
    ++counts[t.i];
    ++counts[t.j];
  }
  m.offsets.assign(n + 1, 0);
  for (Index i = 0; i < n; ++i) m.offsets[i + 1] = m.offsets[i] + counts[i];
  m.columns.resize(m.offsets[n]);
  m.values.resize(m.offsets[n]);
  std::vector<std::size_t> cursor(m.offsets.begin(), m.offsets.end() - 1);
  for (const auto& t : upper) {
    m.columns[cursor[t.i]] = t.j;
    m.values[cursor[t.i]++] = t.w;
    m.columns[cursor[t.j]] = t.i;
    m.values[cursor[t.j]++] = t.w;
  }
  for (Index i = 0; i < n; ++i) {
    const std::size_t b = m.offsets[i], e = m.offsets[i + 1];
    std::vector<std::pair<Index, double>> row;
    row.reserve(e - b);
    for (std::size_t p = b; p < e; ++p) row.emplace_back(m.columns[p], m.values[p]);
    std::sort(row.begin(), row.end());
    for (std::size_t p = b; p < e; ++p) {
      m.columns[p] = row[p - b].first;
      m.values[p] = row[p - b].second;
    }
  }
  return m;
}

}  // namespace

NeighborGraph build_knn_graph(const EmbeddedDataset& dataset, Index k, unsigned threads) {
  const Index n = dataset.size();
  if (k < 1 || k >= n)
    throw ValidationError("k must satisfy 1 <= k < n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");

  const detail::KdTree tree(dataset.features());
  std::vector<std::vector<detail::KdTree::Neighbor>> neighbors(n);
  parallel_for(n, [&](std::size_t i) { neighbors[i] = tree.nearest(i, k); }, threads);

  double radius_sum = 0.0;
  for (Index i = 0; i < n; ++i) radius_sum += neighbors[i].back().first;
  const double sigma2 = radius_sum / static_cast<double>(n);
  if (!(sigma2 > 0.0))
    throw ValidationError("kernel bandwidth is zero: all k-th neighbor distances vanish");

  // One-sided kernel values keyed by unordered pair; a pair reached from both
  // ends accumulates both halves of (W + W^T) / 2.
  std::vector<Triplet> half;
  half.reserve(n * k);
  for (Index i = 0; i < n; ++i) {
    for (const auto& [d2, j] : neighbors[i]) {
      // Clamp so a far outlier's edge keeps a positive weight instead of underflowing.
      const double w = std::max(std::exp(-d2 / (2.0 * sigma2)), std::numeric_limits<double>::min());
      half.push_back({std::min(i, j), std::max(i, j), w});
    }
  }
  std::sort(half.begin(), half.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  std::vector<Triplet> upper;
  upper.reserve(half.size());
  for (std::size_t p = 0; p < half.size();) {
    if (p + 1 < half.size() && half[p + 1].i == half[p].i && half[p + 1].j == half[p].j) {
      upper.push_back({half[p].i, half[p].j, (half[p].w + half[p + 1].w) / 2.0});
      p += 2;
    } else {
      upper.push_back({half[p].i, half[p].j, half[p].w / 2.0});
      p += 1;
    }
  }

  NeighborGraph g;
  g.adjacency = symmetric_csr(n, upper);
  g.sigma2 = sigma2;
  g.kind = GraphKind::Knn;
  g.k = k;
  return g;
}

NeighborGraph build_epsilon_graph(const EmbeddedDataset& dataset, double h, unsigned threads) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("epsilon-graph radius must be > 0");
  const Index n = dataset.size();
  const detail::KdTree tree(dataset.features());
  // Widen the squared bound slightly for the tree filter; the exact test is
  // on the Euclidean norm itself.
  const double bound = h * h * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  std::vector<std::vector<Index>> rows(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        for (const auto& [d2, j] : tree.within(i, bound))
          if (j > i && std::sqrt(d2) < h) rows[i].push_back(j);
      },
      threads);

  std::vector<Triplet> upper;
  for (Index i = 0; i < n; ++i)
    for (Index j : rows[i]) upper.push_back({i, j, 1.0});

  NeighborGraph g;
  g.adjacency = symmetric_csr(n, upper);
  g.kind = GraphKind::Epsilon;
  g.radius = h;
  return g;
}

NormalizedOperator::NormalizedOperator(const NeighborGraph& graph, Normalization variant)
    : variant_(variant), degrees_(graph.degrees()) {
  const CsrMatrix& a = graph.adjacency;
  const Index n = a.rows;
  Vector inv_sqrt = Vector::Zero(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    const double d = degrees_(static_cast<Eigen::Index>(i));
    if (d > 0.0) inv_sqrt(static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(d);
  }

  CsrMatrix sym = a;
  for (Index i = 0; i < n; ++i)
    for (std::size_t p = a.offsets[i]; p < a.offsets[i + 1]; ++p)
      sym.values[p] = a.values[p] * inv_sqrt(static_cast<Eigen::Index>(i)) *
                      inv_sqrt(static_cast<Eigen::Index>(a.columns[p]));
  // Enforce exact symmetry of the product regardless of multiplication order.
  for (Index i = 0; i < n; ++i)
    for (std::size_t p = sym.offsets[i]; p < sym.offsets[i + 1]; ++p)
      if (sym.columns[p] > i) {
        const Index j = sym.columns[p];
        const auto first = sym.columns.begin() + static_cast<std::ptrdiff_t>(sym.offsets[j]);
        const auto last = sym.columns.begin() + static_cast<std::ptrdiff_t>(sym.offsets[j + 1]);
        const auto it = std::lower_bound(first, last, i);
        sym.values[static_cast<std::size_t>(it - sym.columns.begin())] = sym.values[p];
      }

  if (variant == Normalization::Symmetric) {
    matrix_ = std::move(sym);
    return;
  }
  symmetric_ = std::move(sym);
  matrix_ = a;
  for (Index i = 0; i < n; ++i) {
    const double d = degrees_(static_cast<Eigen::Index>(i));
    for (std::size_t p = a.offsets[i]; p < a.offsets[i + 1]; ++p) matrix_.values[p] = a.values[p] / d;
  }
}

NormalizedOperator normalize(const NeighborGraph& graph, Normalization variant) {
  return NormalizedOperator(graph, variant);
}

void write_edge_list(const NeighborGraph& graph, std::ostream& out) {
  out << "i,j,weight\n";
  const CsrMatrix& a = graph.adjacency;
  for (Index i = 0; i < a.rows; ++i)
    for (std::size_t p = a.offsets[i]; p < a.offsets[i + 1]; ++p)
      if (a.columns[p] > i)
        out << i << ',' << a.columns[p] << ',' << detail::format_double(a.values[p]) << '\n';
}

}  // namespace pls
