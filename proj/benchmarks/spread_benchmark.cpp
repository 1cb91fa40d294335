#include "pls/graph.hpp"
#include "pls/simulation.hpp"
#include "pls/solver.hpp"
#include "pls/spreading.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

namespace {

// Graphs are cached per size so each benchmark only times the solve.
std::shared_ptr<const pls::NormalizedOperator> moons_operator(pls::Index n, pls::Index k) {
  static std::map<std::pair<pls::Index, pls::Index>, std::shared_ptr<const pls::NormalizedOperator>> cache;
  auto& slot = cache[{n, k}];
  if (!slot) {
    const auto data = pls::make_two_moons(n, 0.1, pls::kDefaultMoonSharpness, 1);
    slot = std::make_shared<const pls::NormalizedOperator>(pls::build_knn_graph(data, k),
                                                           pls::Normalization::Symmetric);
  }
  return slot;
}

void BM_SpreadSeed(benchmark::State& state) {
  const auto n = static_cast<pls::Index>(state.range(0));
  const double alpha = static_cast<double>(state.range(1)) / 100.0;
  const auto op = moons_operator(n, 20);
  pls::SolverConfig config;
  config.alpha = alpha;
  config.tolerance = 1e-6;
  pls::Index seed = 0;
  int iterations = 0;
  for (auto _ : state) {
    const auto v = pls::spread_seed(*op, config, seed);
    iterations = v.stats.iterations;
    benchmark::DoNotOptimize(v.normalized.data());
    seed = (seed + 7919) % n;
  }
  state.counters["cg_iterations"] = iterations;
}
BENCHMARK(BM_SpreadSeed)
    ->ArgsProduct({{1000, 10000, 100000}, {90, 99}})
    ->Unit(benchmark::kMillisecond);

void BM_KnnGraph(benchmark::State& state) {
  const auto n = static_cast<pls::Index>(state.range(0));
  const auto data = pls::make_two_moons(n, 0.1, pls::kDefaultMoonSharpness, 1);
  for (auto _ : state) {
    auto g = pls::build_knn_graph(data, 20);
    benchmark::DoNotOptimize(g.adjacency.values.data());
  }
}
BENCHMARK(BM_KnnGraph)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Annotate(benchmark::State& state) {
  const pls::Index n = 10000;
  pls::SolverConfig config;
  config.alpha = 0.9;
  pls::SpreadSession session(moons_operator(n, 20), config, 2);
  pls::Index point = 0;
  for (auto _ : state) {
    session.annotate(point, point % 2);
    point = (point + 104729) % n;
  }
}
BENCHMARK(BM_Annotate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
