#pragma once

#include "pls/annotation.hpp"
#include "pls/dataset.hpp"
#include "pls/graph.hpp"
#include "pls/solver.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace pls {

class FeedbackOracle;

/// Added to every class score at estimate time (never accumulated).
inline constexpr double kEstimateFloor = 1e-4;

/// Enables the Lipschitz bias accumulator used by Hoeffding intervals.
struct LipschitzContext {
  std::shared_ptr<const EmbeddedDataset> dataset;
  double constant = 0.0;
};

/// Incremental probabilistic label spreading over a fixed graph.
///
/// Each annotation spreads a max-normalized heat-kernel column from its seed
/// and adds it to the class score Y^c and the total N. Squared scores (Q) are
/// accumulated for Hoeffding intervals; phi * min(1, L ||x_seed - x||) (B) is
/// accumulated when a Lipschitz constant is configured. Single writer: callers
/// serialize mutation, const members are safe to call concurrently.
class SpreadSession {
public:
  static constexpr std::size_t kDefaultCacheBytes = std::size_t{256} << 20;

  SpreadSession(std::shared_ptr<const NormalizedOperator> op, SolverConfig config,
                Index num_classes, std::optional<LipschitzContext> lipschitz = std::nullopt,
                std::size_t cache_bytes = kDefaultCacheBytes);

  /// Records a new event with the next sequence number and applies it.
  AnnotationEvent annotate(Index point, Index label,
                           AnnotationSource source = AnnotationSource::Human);

  /// Applies an externally numbered event; its sequence must exceed the last
  /// applied one. On error the session is unchanged.
  void apply(const AnnotationEvent& event);

  /// Applies events in order. Distinct seeds are solved up front (in
  /// parallel); with `batched`, repeated (point, class) pairs are folded into
  /// one weighted update. Either way the session is unchanged on error.
  void apply_all(std::span<const AnnotationEvent> events, bool batched = false,
                 unsigned threads = 0);

  SoftLabelEstimate estimates() const;

  Index size() const noexcept { return static_cast<Index>(scores_.rows()); }
  Index num_classes() const noexcept { return static_cast<Index>(scores_.cols()); }
  const SolverConfig& config() const noexcept { return config_; }
  const NormalizedOperator& op() const noexcept { return *op_; }
  std::shared_ptr<const NormalizedOperator> shared_op() const noexcept { return op_; }

  /// n x C per-class cumulative scores Y.
  const Matrix& scores() const noexcept { return scores_; }
  /// Total received mass N.
  const Vector& received() const noexcept { return received_; }
  /// Sum of squared per-event scores Q.
  const Vector& squared() const noexcept { return squared_; }
  /// Bias accumulator B; empty unless a Lipschitz constant is configured.
  const Vector& bias() const noexcept { return bias_; }
  bool has_lipschitz() const noexcept { return lipschitz_.has_value(); }
  std::optional<double> lipschitz_constant() const {
    return lipschitz_ ? std::optional<double>(lipschitz_->constant) : std::nullopt;
  }

  const std::vector<AnnotationEvent>& log() const noexcept { return log_; }
  std::uint64_t next_sequence() const noexcept { return next_sequence_; }

  /// Max-normalized propagation vector for a seed. Uses the cache but never
  /// fills it, so it is safe alongside other readers.
  Vector propagation(Index point) const;

  std::size_t cache_hits() const noexcept { return cache_hits_; }
  std::size_t solves() const noexcept { return solves_; }

private:
  void check_event(const AnnotationEvent& event) const;
  void accumulate(Index point, Index label, double weight, const Vector& phi) noexcept;
  std::shared_ptr<const Vector> lookup(Index point) const;
  std::shared_ptr<const Vector> compute(Index point) const;
  void remember(Index point, std::shared_ptr<const Vector> phi);

  std::shared_ptr<const NormalizedOperator> op_;
  SolverConfig config_;
  std::optional<LipschitzContext> lipschitz_;

  Matrix scores_;
  Vector received_;
  Vector squared_;
  Vector bias_;
  std::vector<AnnotationEvent> log_;
  std::uint64_t next_sequence_ = 1;

  std::size_t cache_capacity_;  // entries
  std::unordered_map<Index, std::shared_ptr<const Vector>> cache_;
  std::deque<Index> cache_order_;
  std::size_t cache_hits_ = 0;
  std::size_t solves_ = 0;
};

/// Draws m events: points uniformly with replacement from a stream seeded by
/// rng_seed, classes from the oracle. Sequences start at first_sequence.
std::vector<AnnotationEvent> draw_events(FeedbackOracle& oracle, Index m, std::uint64_t rng_seed,
                                         std::uint64_t first_sequence = 1);

struct BudgetCheckpoint {
  Index annotations = 0;
  SoftLabelEstimate estimate;
};

/// Runs m simulated annotations and snapshots estimates at each checkpoint
/// (sorted ascending, each <= m). If drawing fails the session is untouched.
std::vector<BudgetCheckpoint> run_budget(SpreadSession& session, FeedbackOracle& oracle, Index m,
                                         std::uint64_t rng_seed,
                                         std::span<const Index> checkpoints);

}  // namespace pls
