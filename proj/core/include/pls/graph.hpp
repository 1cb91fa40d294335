#pragma once

#include "pls/dataset.hpp"
#include "pls/types.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace pls {

/// Compressed sparse row matrix with column indices sorted ascending per row.
struct CsrMatrix {
  Index rows = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<Index> columns;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }
  std::size_t row_begin(Index i) const { return offsets[i]; }
  std::size_t row_end(Index i) const { return offsets[i + 1]; }

  /// y = M x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// Entry (i, j), zero when not stored.
  double at(Index i, Index j) const;
  Matrix to_dense() const;
};

enum class GraphKind { Knn, Epsilon };
enum class Normalization { Symmetric, RandomWalk };

/// Symmetric affinity graph with zero diagonal.
struct NeighborGraph {
  CsrMatrix adjacency;
  /// Gaussian bandwidth (squared embedding distance); 0 for unit weights.
  double sigma2 = 0.0;
  GraphKind kind = GraphKind::Knn;
  Index k = 0;         // kind == Knn
  double radius = 0.0; // kind == Epsilon

  Index size() const noexcept { return adjacency.rows; }
  Vector degrees() const;
  Index isolated_count() const;
};

/// Squared Euclidean distance accumulated in coordinate order. Graph
/// construction and the baselines share this so tie handling is consistent.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Gaussian-weighted k-NN graph. sigma2 is the dataset mean of the squared
/// distance to each point's k-th nearest neighbor; W holds one-sided kernel
/// values and the result is A = (W + W^T) / 2. Distance ties are broken by
/// ascending index. Requires 1 <= k < n and not all points identical.
NeighborGraph build_knn_graph(const EmbeddedDataset& dataset, Index k, unsigned threads = 0);

/// Unit-weight graph with an edge iff ||x_i - x_j|| < h (strict), i != j.
NeighborGraph build_epsilon_graph(const EmbeddedDataset& dataset, double h,
                                  unsigned threads = 0);

/// S = D^{-1/2} A D^{-1/2} (symmetric) or S = D^{-1} A (random walk).
/// Rows and columns of degree-zero nodes are zero.
class NormalizedOperator {
public:
  NormalizedOperator(const NeighborGraph& graph, Normalization variant);

  Index size() const noexcept { return matrix_.rows; }
  Normalization variant() const noexcept { return variant_; }
  const Vector& degrees() const noexcept { return degrees_; }

  /// S in the requested variant.
  const CsrMatrix& matrix() const noexcept { return matrix_; }
  /// D^{-1/2} A D^{-1/2}; identical to matrix() for the symmetric variant.
  const CsrMatrix& symmetric_matrix() const noexcept {
    return variant_ == Normalization::Symmetric ? matrix_ : symmetric_;
  }

  /// y = S x
  void apply(std::span<const double> x, std::span<double> y) const { matrix_.multiply(x, y); }

private:
  Normalization variant_;
  Vector degrees_;
  CsrMatrix matrix_;
  CsrMatrix symmetric_;  // only populated for RandomWalk
};

NormalizedOperator normalize(const NeighborGraph& graph, Normalization variant);

/// Debug dump: "i,j,weight" for i < j.
void write_edge_list(const NeighborGraph& graph, std::ostream& out);

}  // namespace pls
