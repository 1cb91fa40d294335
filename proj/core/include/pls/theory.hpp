#pragma once

#include "pls/solver.hpp"
#include "pls/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pls {

/// Which constants to use for the path length and bandwidth. ProofBody uses
/// eps directly; TheoremStatement targets eps / (12 sqrt 2) for the path
/// length and divides the bandwidth by 3 L_y.
enum class ScheduleVariant { ProofBody, TheoremStatement };

std::string_view to_string(ScheduleVariant variant);
ScheduleVariant parse_schedule_variant(std::string_view text);

/// Dataset-size-dependent spreading intensity, path length, epsilon-graph
/// bandwidth and annotation budget.
struct RateSchedule {
  Index n = 0;
  Index d = 0;
  double eps = 0.0;
  double lipschitz = 0.0;
  double kappa = 1.0;
  ScheduleVariant variant = ScheduleVariant::ProofBody;

  double alpha = 0.0;     // 1 - n^{-1/(d+1)}
  Index path_length = 0;  // ceil(log_alpha(target))
  double bandwidth = 0.0; // h_n
  Index budget = 0;       // ceil(kappa n^{1 - 1/(2(d+1))} ln n)
};

/// Requires n >= 2, 0 < eps < 1, lipschitz > 0, kappa > 0. The returned path
/// length always satisfies alpha^l < target (l is bumped if rounding in the
/// logarithm lands exactly on the boundary).
RateSchedule rate_schedule(Index n, Index d, double eps, double lipschitz, double kappa,
                           ScheduleVariant variant = ScheduleVariant::ProofBody);

struct ConsistencyConfig {
  std::vector<Index> ns;
  Index d = 1;
  double eps = 0.2;
  double lipschitz = 1.0;
  double kappa = 1.0;
  ScheduleVariant variant = ScheduleVariant::ProofBody;
  Index repetitions = 10;
  std::uint64_t seed = 0;
  /// Sine target domain. The bandwidth is in the same units as eps, so the
  /// domain should be of unit scale for the schedule to produce usable graphs.
  double lo = 0.0;
  double hi = 1.0;
  double tolerance = 1e-6;
  unsigned threads = 0;
};

struct ConsistencyRun {
  Index n = 0;
  Index repetition = 0;
  RateSchedule schedule;
  double max_error = 0.0;   // max_q ||p_hat_q - p_q||_2
  double mean_error = 0.0;  // mean_q ||p_hat_q - p_q||_2
  Index isolated = 0;
  /// |row sum - 1/(1-alpha)| * (1-alpha) for a random connected row.
  double row_sum_error = 0.0;
  double wall_ms = 0.0;
  bool ok = true;
  std::string note;
};

struct ConsistencySummary {
  Index n = 0;
  double mean_max_error = 0.0;
  double mean_mean_error = 0.0;
  Index completed = 0;
};

struct ConsistencyResult {
  std::vector<ConsistencyRun> runs;       // grouped by n, then repetition
  std::vector<ConsistencySummary> summary;

  /// Repetitions whose max error strictly decreases across every consecutive n.
  Index monotone_repetitions() const;
};

/// Sine-1D harness on epsilon-graphs with random-walk normalization and the
/// unnormalized (1 - alpha) heat-kernel estimator. Repetition r uses the same
/// seed stream for every n. Failed repetitions are recorded, not thrown.
ConsistencyResult consistency_experiment(const ConsistencyConfig& config);

void write_consistency_table(const ConsistencyResult& result, std::ostream& out);

}  // namespace pls
