#pragma once

#include "pls/graph.hpp"
#include "pls/types.hpp"

#include <optional>

namespace pls {

struct SolverConfig {
  /// Spreading intensity in [0, 1). 0 disables spreading.
  double alpha = 0.9;
  /// Bound on ||(I - alpha S) x - b||_2 / ||b||_2.
  double tolerance = 1e-6;
  /// Defaults to 10 * sqrt(n) + 100 when unset.
  std::optional<int> max_iterations;

  void validate() const;
  int iteration_limit(Index n) const;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Heat-kernel column for one seed.
struct PropagationVector {
  Vector raw;         // (I - alpha S)^{-1} e_q
  Vector normalized;  // raw / max(raw)
  Index seed = 0;
  SolveStats stats;
};

/// Entries above this negative threshold are treated as round-off and clamped.
inline constexpr double kNegativeClampThreshold = -1e-10;

/// Solves (I - alpha S) x = rhs with conjugate gradients on the symmetric
/// form. The random-walk variant is handled through the similarity
/// D^{1/2} (I - alpha S_rw) D^{-1/2} = I - alpha S_sym. The returned vector
/// satisfies the relative residual bound in the original system; throws
/// SolverError otherwise.
Vector solve_heat_system(const NormalizedOperator& op, const SolverConfig& config,
                         const Vector& rhs, SolveStats* stats = nullptr);

/// Spreads a single seed and normalizes by the maximum entry. Also refines
/// until no entry falls below kNegativeClampThreshold, then clamps the
/// remaining round-off negatives to zero.
PropagationVector spread_seed(const NormalizedOperator& op, const SolverConfig& config, Index seed);

/// Dense (I - alpha S)^{-1} by LU factorization. Test oracle; n <= 2000.
Matrix dense_heat_kernel(const NormalizedOperator& op, double alpha);

/// sum_{i=0}^{terms} (alpha S)^i e_seed by repeated sparse products.
Vector neumann_partial_sum(const NormalizedOperator& op, double alpha, Index seed, int terms);

}  // namespace pls
