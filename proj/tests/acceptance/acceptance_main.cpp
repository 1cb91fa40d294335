// Acceptance suite: one PASS/FAIL line per headline criterion. Exit code is
// the number of failures. Thresholds are fixed here; nothing is tuned at run
// time.

#include "oracles.hpp"

#include "pls/baselines.hpp"
#include "pls/experiment.hpp"
#include "pls/simulation.hpp"
#include "pls/solver.hpp"
#include "pls/spreading.hpp"
#include "pls/theory.hpp"
#include "pls/uncertainty.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace t = pls::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

pls::SolverConfig solver(double alpha, double tol = 1e-6) {
  pls::SolverConfig c;
  c.alpha = alpha;
  c.tolerance = tol;
  return c;
}

// Spread columns of random k-NN graphs against a dense LU inverse built
// independently from the affinity matrix.
Outcome oracle_equivalence() {
  const auto start = Clock::now();
  const pls::Index ks[] = {3, 5, 10};
  const double alphas[] = {0.1, 0.5, 0.9, 0.99};
  pls::Rng rng(2024);
  // The bound is on entries, the solver tolerance on the relative residual;
  // at alpha = 0.99 the two differ by the condition number (~100), so the
  // comparison runs at 1e-8. The default 1e-6 result is reported alongside.
  double worst = 0.0;
  double worst_default = 0.0;
  for (int g = 0; g < 50; ++g) {
    const pls::Index n = 20 + rng.below(181);  // 20..200
    const pls::Index d = 1 + rng.below(4);
    const pls::Index k = ks[g % 3];
    const double alpha = alphas[(g / 3) % 4];
    const auto data = t::random_dataset(n, d, 1000 + g);
    const auto graph = pls::build_knn_graph(data, k);
    const auto variant = g % 2 ? pls::Normalization::RandomWalk : pls::Normalization::Symmetric;
    const pls::NormalizedOperator op(graph, variant);
    const Eigen::MatrixXd dense =
        t::dense_inverse_kernel(t::dense_normalized(graph.adjacency.to_dense(), variant), alpha);
    const pls::Matrix lib = pls::dense_heat_kernel(op, alpha);
    worst = std::max(worst, (lib - dense).cwiseAbs().maxCoeff());
    for (pls::Index q = 0; q < n; ++q) {
      const auto col = dense.col(static_cast<Eigen::Index>(q));
      const auto v = pls::spread_seed(op, solver(alpha, 1e-8), q);
      worst = std::max(worst, (v.raw - col).cwiseAbs().maxCoeff());
      const auto loose = pls::spread_seed(op, solver(alpha, 1e-6), q);
      worst_default = std::max(worst_default, (loose.raw - col).cwiseAbs().maxCoeff());
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-5 && secs < 30.0,
          fmt("max |spread - dense| = %.3g at tolerance 1e-8 (<= 1e-5; %.3g at 1e-6), %.1f s (< 30 s)",
              worst, worst_default, secs)};
}

// Random-walk kernel rows sum to 1/(1-alpha) on connected unit-weight graphs.
Outcome row_sum_identity() {
  pls::Rng rng(77);
  double worst = 0.0;
  int graphs = 0;
  int attempt = 0;
  while (graphs < 100) {
    ++attempt;
    const pls::Index n = 30 + rng.below(171);
    const pls::Index d = 1 + rng.below(3);
    const auto data = t::random_dataset(n, d, 5000 + attempt);
    const double h = 0.8 + 1.5 * rng.uniform();
    const auto graph = pls::build_epsilon_graph(data, h);
    if (t::component_count(graph.adjacency.to_dense()) != 1) continue;
    ++graphs;
    const double alpha = 0.05 + 0.94 * rng.uniform();
    const pls::NormalizedOperator op(graph, pls::Normalization::RandomWalk);
    const double expected = 1.0 / (1.0 - alpha);
    const pls::Matrix k = pls::dense_heat_kernel(op, alpha);
    worst = std::max(worst, ((k.rowwise().sum().array() - expected).abs() / expected).maxCoeff());
    const pls::Vector ones = pls::Vector::Ones(static_cast<Eigen::Index>(n));
    const pls::Vector x = pls::solve_heat_system(op, solver(alpha, 1e-10), ones);
    worst = std::max(worst, ((x.array() - expected).abs() / expected).maxCoeff());
  }
  return {worst <= 1e-6, fmt("max relative deviation %.3g over 100 connected graphs (<= 1e-6)", worst)};
}

Outcome alpha_zero_is_histogram() {
  double worst = 0.0;
  for (pls::Index n : {2u, 10u, 100u, 1000u, 5000u}) {
    const auto data = pls::make_two_moons(n, 0.1, pls::kDefaultMoonSharpness, n);
    auto op = std::make_shared<const pls::NormalizedOperator>(pls::build_knn_graph(data, 1),
                                                              pls::Normalization::Symmetric);
    for (pls::Index m : {pls::Index{1}, n / 2 + 1, 3 * n}) {
      pls::FeedbackOracle oracle(data, m);
      const auto events = pls::draw_events(oracle, m, n + m);
      pls::SpreadSession s(op, solver(0.0), 2);
      s.apply_all(events);
      const auto hist = pls::histogram_estimate(pls::AnnotationLog{n, 2, events});
      worst = std::max(worst, (s.estimates().probabilities - hist.probabilities).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-3, fmt("max entry difference %.3g for n in {2..5000} (<= 1e-3)", worst)};
}

struct MoonRun {
  std::vector<double> rmse;  // one per budget
};

// Mean RMSE per budget over seeds 1..10 on fresh two-moons datasets.
std::vector<std::vector<double>> moons_rmse(double alpha, pls::Estimator est,
                                            const std::vector<std::string>& budgets) {
  std::vector<std::vector<double>> per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = pls::make_two_moons(1000, 0.1, pls::kDefaultMoonSharpness, seed);
    pls::ExperimentConfig c;
    c.graph.k = 5;
    c.solver = solver(alpha);
    c.estimator = est;
    c.seed = seed;
    for (const auto& b : budgets) c.budgets.push_back(pls::resolve_budget(b, data.size()));
    std::vector<double> row;
    for (const auto& r : pls::run_experiment(data, c)) row.push_back(r.rmse);
    per_seed.push_back(row);
  }
  return per_seed;
}

std::vector<double> column_means(const std::vector<std::vector<double>>& rows) {
  std::vector<double> mean(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size(); ++j) mean[j] += r[j] / static_cast<double>(rows.size());
  return mean;
}

Outcome two_moons_trend() {
  const auto start = Clock::now();
  const auto pls_runs = moons_rmse(0.9, pls::Estimator::Pls, {"1%", "10%", "100%"});
  const auto hist_runs = moons_rmse(0.9, pls::Estimator::Histogram, {"10%"});
  const auto mean = column_means(pls_runs);
  int wins = 0;
  for (std::size_t s = 0; s < pls_runs.size(); ++s) wins += pls_runs[s][1] < hist_runs[s][0];
  const bool decreasing = mean[0] > mean[1] && mean[1] > mean[2];
  const double secs = seconds_since(start);
  return {decreasing && wins >= 9 && mean[1] < 0.15 && secs < 120.0,
          fmt("mean RMSE 1%%/10%%/100%% = %.4f/%.4f/%.4f, PLS beats histogram at 10%% in %d/10, "
              "RMSE@10%% %.4f (< 0.15), %.1f s (< 120 s)",
              mean[0], mean[1], mean[2], wins, mean[1], secs)};
}

Outcome alpha_tradeoff() {
  const auto lo = column_means(moons_rmse(0.5, pls::Estimator::Pls, {"1%", "1000%"}));
  const auto hi = column_means(moons_rmse(0.99, pls::Estimator::Pls, {"1%", "1000%"}));
  return {hi[0] < lo[0] && lo[1] < hi[1],
          fmt("budget 1%%: RMSE(0.99)=%.4f < RMSE(0.5)=%.4f; budget 1000%%: RMSE(0.5)=%.4f < RMSE(0.99)=%.4f",
              hi[0], lo[0], lo[1], hi[1])};
}

Outcome single_annotation_clear_cut() {
  pls::Rng rng(31);
  int good = 0;
  int attempts = 0;
  while (attempts < 20) {
    const pls::Index n = 50 + rng.below(451);
    const auto data = t::random_dataset(n, 1 + rng.below(3), 700 + attempts + good);
    const pls::Index k = 3 + rng.below(8);
    const auto graph = pls::build_knn_graph(data, k);
    if (t::component_count(graph.adjacency.to_dense()) != 1) continue;
    ++attempts;
    const pls::Index classes = 2 + rng.below(4);
    const pls::Index c = rng.below(classes);
    const double alpha = 0.5 + 0.49 * rng.uniform();
    pls::SpreadSession s(std::make_shared<const pls::NormalizedOperator>(
                             graph, rng.below(2) ? pls::Normalization::Symmetric
                                                 : pls::Normalization::RandomWalk),
                         solver(alpha), classes);
    s.annotate(rng.below(n), c);
    const auto est = s.estimates();
    bool ok = true;
    for (Eigen::Index i = 0; i < est.probabilities.rows(); ++i) {
      if (!(s.received()(i) > 0.0)) continue;
      Eigen::Index arg = 0;
      est.probabilities.row(i).maxCoeff(&arg);
      ok = ok && static_cast<pls::Index>(arg) == c;
    }
    good += ok;
  }
  return {good == 20, fmt("%d/20 instances with argmax equal to the annotated class", good)};
}

Outcome hoeffding_coverage() {
  const auto start = Clock::now();
  auto data = std::make_shared<const pls::EmbeddedDataset>(pls::make_sine_1d(2000, 0.0, 10.0, 42));
  auto op = std::make_shared<const pls::NormalizedOperator>(pls::build_knn_graph(*data, 20),
                                                            pls::Normalization::Symmetric);
  pls::SpreadSession s(op, solver(0.99), 2, pls::LipschitzContext{data, 0.5});
  pls::FeedbackOracle oracle(*data, 42);
  s.apply_all(pls::draw_events(oracle, 2000, 43));
  const auto rows = pls::ci_report(s, pls::IntervalMethod::Hoeffding, 0.05);
  const double coverage = pls::point_coverage(rows, data->truth());
  double width = 0.0;
  for (const auto& r : rows) width += r.interval.width() / static_cast<double>(rows.size());
  const double secs = seconds_since(start);
  return {coverage >= 0.95 && secs < 60.0,
          fmt("per-point coverage %.4f (>= 0.95), mean width %.3f, %.1f s (< 60 s)", coverage,
              width, secs)};
}

Outcome wilson_coverage() {
  auto op = std::make_shared<const pls::NormalizedOperator>(
      pls::build_epsilon_graph(t::line_dataset({0.0, 10.0}), 1.0), pls::Normalization::Symmetric);
  std::string detail;
  bool pass = true;
  for (std::uint64_t n_virt : {10u, 50u}) {
    pls::Rng rng(900 + n_virt);
    int hits = 0;
    const int trials = 10000;
    for (int trial = 0; trial < trials; ++trial) {
      const double p = 0.05 + 0.9 * rng.uniform();
      pls::SpreadSession s(op, solver(0.0), 2);
      for (std::uint64_t i = 0; i < n_virt; ++i) s.annotate(0, rng.uniform() < p ? 0 : 1);
      hits += pls::wilson_ci(s, 0, 0, 1.959963984540054).contains(p);
    }
    const double cov = hits / static_cast<double>(trials);
    pass = pass && cov >= 0.93;
    detail += fmt("n_virt=%d coverage %.4f; ", static_cast<int>(n_virt), cov);
  }
  return {pass, detail + "(>= 0.93 each)"};
}

Outcome consistency_trend() {
  pls::ConsistencyConfig c;
  c.ns = {500, 2000, 8000};
  c.eps = 0.2;
  c.kappa = 1.0;
  c.repetitions = 10;
  c.seed = 2025;
  const auto result = pls::consistency_experiment(c);
  const auto monotone = result.monotone_repetitions();
  std::string means;
  for (const auto& s : result.summary) means += fmt("%.4f ", s.mean_max_error);
  return {monotone >= 8, fmt("%d/10 repetitions with strictly decreasing max error (>= 8); mean max error %s",
                             static_cast<int>(monotone), means.c_str())};
}

Outcome rate_schedule() {
  bool bound = true;
  for (double eps : {0.05, 0.1, 0.2})
    for (pls::Index n = 2; n <= 1000000 && bound; ++n) {
      const auto s = pls::rate_schedule(n, 1, eps, 1.0, 1.0);
      bound = std::pow(s.alpha, static_cast<double>(s.path_length)) < eps;
    }
  const auto ex = pls::rate_schedule(1024, 1, 0.1, 1.0, 1.0);
  const bool example = ex.alpha == 0.96875 && ex.path_length == 73;
  return {bound && example, fmt("alpha^l < eps for all n in [2, 1e6]: %s; n=1024: alpha=%.17g l=%d",
                                bound ? "yes" : "no", ex.alpha, static_cast<int>(ex.path_length))};
}

Outcome performance() {
  const auto data = pls::make_two_moons(100000, 0.1, pls::kDefaultMoonSharpness, 1);
  const auto graph = pls::build_knn_graph(data, 20);
  const pls::NormalizedOperator op(graph, pls::Normalization::Symmetric);
  std::vector<double> ms;
  int iterations = 0;
  for (pls::Index seed : {0u, 12345u, 50000u, 77777u, 99999u}) {
    const auto start = Clock::now();
    const auto v = pls::spread_seed(op, solver(0.9, 1e-6), seed);
    ms.push_back(seconds_since(start) * 1000.0);
    iterations = std::max(iterations, v.stats.iterations);
  }
  const double worst = *std::max_element(ms.begin(), ms.end());
  std::sort(ms.begin(), ms.end());
  // Reported only: the criterion leaves alpha open.
  const auto start = Clock::now();
  pls::spread_seed(op, solver(0.99, 1e-6), 0);
  const double slow_alpha_ms = seconds_since(start) * 1000.0;
  return {worst <= 500.0, fmt("slowest of 5 seeds %.1f ms, median %.1f ms (<= 500 ms), alpha=0.9, "
                              "%d CG iterations max; alpha=0.99 takes %.1f ms",
                              worst, ms[2], iterations, slow_alpha_ms)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle-equivalence", oracle_equivalence},
      {"row-sum-identity", row_sum_identity},
      {"alpha-zero-equals-histogram", alpha_zero_is_histogram},
      {"two-moons-trend", two_moons_trend},
      {"alpha-tradeoff-ordering", alpha_tradeoff},
      {"single-annotation-clear-cut", single_annotation_clear_cut},
      {"hoeffding-coverage", hoeffding_coverage},
      {"wilson-coverage", wilson_coverage},
      {"consistency-trend", consistency_trend},
      {"rate-schedule", rate_schedule},
      {"performance-envelope", performance},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("%s %s: %s\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures;
}
