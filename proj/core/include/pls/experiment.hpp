#pragma once

#include "pls/dataset.hpp"
#include "pls/graph.hpp"
#include "pls/simulation.hpp"
#include "pls/solver.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace pls {

enum class Estimator { Pls, Gkr, Knn, Histogram };

std::string_view to_string(Estimator estimator);
Estimator parse_estimator(std::string_view text);

struct GraphSpec {
  GraphKind kind = GraphKind::Knn;
  Index k = 5;
  double radius = 0.0;
  Normalization normalization = Normalization::Symmetric;
};

NeighborGraph build_graph(const EmbeddedDataset& dataset, const GraphSpec& spec,
                          unsigned threads = 0);

/// "0.1", "10%", "2.5" are fractions of n (rounded to nearest); "100" is an
/// absolute count.
Index resolve_budget(std::string_view text, Index n);

struct ExperimentConfig {
  GraphSpec graph;
  SolverConfig solver;
  Estimator estimator = Estimator::Pls;
  double gamma = 1.0;   // Gkr
  Index knn_k = 5;      // Knn
  std::vector<Index> budgets;  // absolute annotation counts, ascending
  Index repetitions = 1;
  std::uint64_t seed = 0;
  double kl_floor = 1e-9;
  unsigned threads = 0;
};

/// Seeds used by repetition r; shared by every estimator so runs with the
/// same seed see identical event logs.
std::uint64_t repetition_seed(std::uint64_t seed, Index repetition);

/// The event log of repetition r, long enough for the largest budget.
std::vector<AnnotationEvent> repetition_events(const EmbeddedDataset& dataset,
                                               const ExperimentConfig& config, Index repetition);

/// Runs every repetition and evaluates the estimator at each budget against
/// the dataset's truth. A k-NN baseline with too few annotated points yields
/// NaN metrics for that budget.
std::vector<ExperimentRecord> run_experiment(const EmbeddedDataset& dataset,
                                             const ExperimentConfig& config);

}  // namespace pls
