#include "pls/solver.hpp"

#include "pls/error.hpp"

#include <Eigen/LU>

#include <cmath>

namespace pls {

void SolverConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ValidationError("alpha must lie in [0, 1)");
  if (!(tolerance > 0.0)) throw ValidationError("solver tolerance must be positive");
  if (max_iterations && *max_iterations < 1)
    throw ValidationError("max_iterations must be positive");
}

int SolverConfig::iteration_limit(Index n) const {
  if (max_iterations) return *max_iterations;
  return static_cast<int>(10.0 * std::sqrt(static_cast<double>(n))) + 100;
}

namespace {

// y = (I - alpha S_sym) x
void apply_system(const CsrMatrix& s, double alpha, const Vector& x, Vector& y) {
  s.multiply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
             std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
  y = x - alpha * y;
}

// Conjugate gradients on the SPD matrix I - alpha S_sym, continuing from x.
// Stops when ||r|| <= target or after `budget` iterations; returns ||r||.
double conjugate_gradient(const CsrMatrix& s, double alpha, const Vector& b, Vector& x,
                          double target, int budget, int& iterations) {
  const Eigen::Index n = b.size();
  Vector r(n), p(n), ap(n);
  apply_system(s, alpha, x, ap);
  r = b - ap;
  double rr = r.squaredNorm();
  if (std::sqrt(rr) <= target) return std::sqrt(rr);
  p = r;
  for (int it = 0; it < budget; ++it) {
    apply_system(s, alpha, p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    x.noalias() += step * p;
    r.noalias() -= step * ap;
    const double rr_next = r.squaredNorm();
    ++iterations;
    if (std::sqrt(rr_next) <= target) return std::sqrt(rr_next);
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  // Recompute the true residual; the recursive one drifts.
  apply_system(s, alpha, x, ap);
  return (b - ap).norm();
}

double original_residual(const NormalizedOperator& op, double alpha, const Vector& x,
                         const Vector& rhs) {
  Vector sx(x.size());
  op.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
           std::span<double>(sx.data(), static_cast<std::size_t>(sx.size())));
  return (x - alpha * sx - rhs).norm();
}

}  // namespace

Vector solve_heat_system(const NormalizedOperator& op, const SolverConfig& config,
                         const Vector& rhs, SolveStats* stats) {
  config.validate();
  const Index n = op.size();
  if (static_cast<Index>(rhs.size()) != n)
    throw ValidationError("right-hand side length does not match graph size");

  SolveStats local;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0 || config.alpha == 0.0) {
    if (stats) *stats = local;
    return rhs;
  }

  const CsrMatrix& sym = op.symmetric_matrix();
  const bool random_walk = op.variant() == Normalization::RandomWalk;
  const Vector& deg = op.degrees();

  // Transform to the symmetric system: scale = D^{1/2} (1 for isolated nodes).
  Vector scale = Vector::Ones(rhs.size());
  if (random_walk)
    for (Eigen::Index i = 0; i < scale.size(); ++i)
      if (deg(i) > 0.0) scale(i) = std::sqrt(deg(i));
  const Vector b = random_walk ? Vector(rhs.cwiseProduct(scale)) : rhs;

  const int limit = config.iteration_limit(n);
  const double goal = config.tolerance * bnorm;
  double target = config.tolerance * b.norm();
  if (random_walk) {
    // ||r_orig|| <= ||D^{-1/2}|| ||r_sym||; start from that bound.
    const double min_scale = scale.minCoeff();
    target *= min_scale * bnorm / b.norm();
  }

  Vector y = Vector::Zero(rhs.size());
  Vector x;
  double residual = 0.0;
  while (true) {
    const int remaining = limit - local.iterations;
    conjugate_gradient(sym, config.alpha, b, y, target, remaining, local.iterations);
    x = random_walk ? Vector(y.cwiseQuotient(scale)) : y;
    residual = original_residual(op, config.alpha, x, rhs);
    if (residual <= goal) break;
    if (local.iterations >= limit) {
      throw SolverError("heat-kernel solve did not converge", residual / bnorm,
                        local.iterations);
    }
    target *= 0.1;
  }
  local.residual = residual / bnorm;
  if (stats) *stats = local;
  return x;
}

PropagationVector spread_seed(const NormalizedOperator& op, const SolverConfig& config,
                              Index seed) {
  const Index n = op.size();
  if (seed >= n) throw ValidationError("seed index out of range");
  Vector e = Vector::Zero(static_cast<Eigen::Index>(n));
  e(static_cast<Eigen::Index>(seed)) = 1.0;

  PropagationVector out;
  out.seed = seed;
  SolverConfig refined = config;
  out.raw = solve_heat_system(op, refined, e, &out.stats);
  // Round-off at far nodes can dip below zero; tighten until it stays within
  // the clamp threshold.
  int total_iterations = out.stats.iterations;
  while (out.raw.size() > 0 && out.raw.minCoeff() < kNegativeClampThreshold) {
    if (refined.tolerance < 1e-15 || total_iterations >= config.iteration_limit(n))
      throw SolverError("negative propagation score " + std::to_string(out.raw.minCoeff()),
                        out.stats.residual, total_iterations);
    refined.tolerance *= 1e-2;
    refined.max_iterations = config.iteration_limit(n) - total_iterations;
    out.raw = solve_heat_system(op, refined, e, &out.stats);
    total_iterations += out.stats.iterations;
  }
  out.stats.iterations = total_iterations;
  out.raw = out.raw.cwiseMax(0.0);
  out.normalized = out.raw / out.raw.maxCoeff();
  return out;
}

Matrix dense_heat_kernel(const NormalizedOperator& op, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in [0, 1)");
  const auto n = static_cast<Eigen::Index>(op.size());
  if (n > 2000) throw ValidationError("dense heat kernel limited to n <= 2000");
  const Eigen::MatrixXd s = op.matrix().to_dense();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * s;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  return lu.inverse();
}

Vector neumann_partial_sum(const NormalizedOperator& op, double alpha, Index seed, int terms) {
  if (terms < 0) throw ValidationError("term count must be nonnegative");
  const auto n = static_cast<Eigen::Index>(op.size());
  if (seed >= op.size()) throw ValidationError("seed index out of range");
  Vector term = Vector::Zero(n);
  term(static_cast<Eigen::Index>(seed)) = 1.0;
  Vector sum = term;
  Vector next(n);
  for (int t = 1; t <= terms; ++t) {
    op.apply(std::span<const double>(term.data(), static_cast<std::size_t>(n)),
             std::span<double>(next.data(), static_cast<std::size_t>(n)));
    term = alpha * next;
    sum += term;
  }
  return sum;
}

}  // namespace pls
