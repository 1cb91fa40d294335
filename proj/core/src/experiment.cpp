#include "pls/experiment.hpp"

#include "csv.hpp"
#include "pls/baselines.hpp"
#include "pls/error.hpp"
#include "pls/spreading.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

namespace pls {

std::string_view to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::Pls: return "pls";
    case Estimator::Gkr: return "gkr";
    case Estimator::Knn: return "knn";
    case Estimator::Histogram: return "histogram";
  }
  return "pls";
}

Estimator parse_estimator(std::string_view text) {
  if (text == "pls") return Estimator::Pls;
  if (text == "gkr") return Estimator::Gkr;
  if (text == "knn") return Estimator::Knn;
  if (text == "histogram") return Estimator::Histogram;
  throw ValidationError("unknown estimator '" + std::string(text) + "'");
}

NeighborGraph build_graph(const EmbeddedDataset& dataset, const GraphSpec& spec,
                          unsigned threads) {
  return spec.kind == GraphKind::Knn ? build_knn_graph(dataset, spec.k, threads)
                                     : build_epsilon_graph(dataset, spec.radius, threads);
}

Index resolve_budget(std::string_view text, Index n) {
  text = detail::trim(text);
  if (text.empty()) throw ValidationError("empty budget");
  bool percent = false;
  if (text.back() == '%') {
    percent = true;
    text.remove_suffix(1);
  }
  if (percent || text.find_first_of(".eE") != std::string_view::npos) {
    double fraction = detail::parse_double(text, 0);
    if (percent) fraction /= 100.0;
    if (!(fraction > 0.0) || !std::isfinite(fraction))
      throw ValidationError("budget fraction must be positive");
    const auto count = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
    if (count < 1) throw ValidationError("budget rounds to zero annotations");
    return count;
  }
  const long long count = detail::parse_integer(text, 0);
  if (count < 1) throw ValidationError("budget must be at least one annotation");
  return static_cast<Index>(count);
}

std::uint64_t repetition_seed(std::uint64_t seed, Index repetition) {
  return splitmix64(seed ^ splitmix64(0x5eedULL + repetition));
}

std::vector<AnnotationEvent> repetition_events(const EmbeddedDataset& dataset,
                                               const ExperimentConfig& config, Index repetition) {
  if (!dataset.has_truth()) throw ValidationError("simulated experiments need ground truth");
  if (config.budgets.empty()) throw ValidationError("no budgets given");
  const Index m = *std::max_element(config.budgets.begin(), config.budgets.end());
  const std::uint64_t seed = repetition_seed(config.seed, repetition);
  FeedbackOracle oracle(dataset, seed);
  return draw_events(oracle, m, splitmix64(seed + 1));
}

std::vector<ExperimentRecord> run_experiment(const EmbeddedDataset& dataset,
                                             const ExperimentConfig& config) {
  if (!dataset.has_truth()) throw ValidationError("simulated experiments need ground truth");
  if (config.budgets.empty()) throw ValidationError("no budgets given");
  if (!std::is_sorted(config.budgets.begin(), config.budgets.end()))
    throw ValidationError("budgets must be ascending");
  if (config.repetitions < 1) throw ValidationError("repetitions must be positive");
  config.solver.validate();

  using clock = std::chrono::steady_clock;
  const Index n = dataset.size();
  const Index classes = dataset.num_classes();
  const Matrix& truth = dataset.truth();

  std::shared_ptr<const NormalizedOperator> op;
  if (config.estimator == Estimator::Pls) {
    const NeighborGraph graph = build_graph(dataset, config.graph, config.threads);
    op = std::make_shared<const NormalizedOperator>(graph, config.graph.normalization);
  }

  std::vector<ExperimentRecord> records;
  for (Index rep = 0; rep < config.repetitions; ++rep) {
    const auto events = repetition_events(dataset, config, rep);
    std::unique_ptr<SpreadSession> session;
    if (op) session = std::make_unique<SpreadSession>(op, config.solver, classes);
    Index applied = 0;
    for (const Index budget : config.budgets) {
      const auto start = clock::now();
      SoftLabelEstimate estimate;
      bool defined = true;
      const std::span<const AnnotationEvent> prefix(events.data(), budget);
      switch (config.estimator) {
        case Estimator::Pls:
          session->apply_all(std::span(events).subspan(applied, budget - applied), false,
                             config.threads);
          applied = budget;
          estimate = session->estimates();
          break;
        case Estimator::Gkr:
          estimate = gkr_estimate(dataset, {n, classes, {prefix.begin(), prefix.end()}}, config.gamma);
          break;
        case Estimator::Knn: {
          AnnotationLog log{n, classes, {prefix.begin(), prefix.end()}};
          if (log.distinct_points() < config.knn_k) {
            defined = false;
          } else {
            estimate = knn_estimate(dataset, log, config.knn_k);
          }
          break;
        }
        case Estimator::Histogram:
          estimate = histogram_estimate({n, classes, {prefix.begin(), prefix.end()}});
          break;
      }
      ExperimentRecord rec;
      rec.budget = budget;
      rec.repetition = rep;
      if (defined) {
        rec.rmse = rmse(estimate.probabilities, truth);
        rec.kl = kl_divergence(estimate.probabilities, truth, config.kl_floor);
      } else {
        rec.rmse = rec.kl = std::numeric_limits<double>::quiet_NaN();
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
      records.push_back(rec);
    }
  }
  return records;
}

}  // namespace pls
