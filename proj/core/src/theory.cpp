#include "pls/theory.hpp"

#include "csv.hpp"
#include "pls/error.hpp"
#include "pls/graph.hpp"
#include "pls/parallel.hpp"
#include "pls/rng.hpp"
#include "pls/simulation.hpp"
#include "pls/spreading.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

namespace pls {

std::string_view to_string(ScheduleVariant variant) {
  return variant == ScheduleVariant::ProofBody ? "proof_body" : "theorem_statement";
}

ScheduleVariant parse_schedule_variant(std::string_view text) {
  if (text == "proof_body" || text == "proof") return ScheduleVariant::ProofBody;
  if (text == "theorem_statement" || text == "theorem") return ScheduleVariant::TheoremStatement;
  throw ValidationError("unknown schedule variant '" + std::string(text) + "'");
}

RateSchedule rate_schedule(Index n, Index d, double eps, double lipschitz, double kappa,
                           ScheduleVariant variant) {
  if (n < 2) throw ValidationError("rate schedule needs n >= 2");
  if (d < 1) throw ValidationError("dimension must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
  if (!(lipschitz > 0.0)) throw ValidationError("Lipschitz constant must be positive");
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");

  RateSchedule s;
  s.n = n;
  s.d = d;
  s.eps = eps;
  s.lipschitz = lipschitz;
  s.kappa = kappa;
  s.variant = variant;

  const auto nd = static_cast<double>(n);
  const auto dd = static_cast<double>(d);
  s.alpha = 1.0 - std::pow(nd, -1.0 / (dd + 1.0));

  const double target =
      variant == ScheduleVariant::ProofBody ? eps : eps / (std::numbers::sqrt2 * 12.0);
  auto length = static_cast<Index>(std::ceil(std::log(target) / std::log(s.alpha)));
  while (std::pow(s.alpha, static_cast<double>(length)) >= target) ++length;
  s.path_length = length;

  s.bandwidth = variant == ScheduleVariant::ProofBody
                    ? eps / static_cast<double>(length)
                    : eps / (3.0 * lipschitz * static_cast<double>(length));
  s.budget = static_cast<Index>(
      std::ceil(kappa * std::pow(nd, 1.0 - 1.0 / (2.0 * (dd + 1.0))) * std::log(nd)));
  return s;
}

Index ConsistencyResult::monotone_repetitions() const {
  if (summary.size() < 2) return 0;
  const Index reps = runs.size() / summary.size();
  Index count = 0;
  for (Index r = 0; r < reps; ++r) {
    bool monotone = true;
    for (std::size_t k = 0; k + 1 < summary.size(); ++k) {
      const auto& a = runs[k * reps + r];
      const auto& b = runs[(k + 1) * reps + r];
      if (!a.ok || !b.ok || !(b.max_error < a.max_error)) monotone = false;
    }
    count += monotone;
  }
  return count;
}

namespace {

ConsistencyRun run_once(const ConsistencyConfig& config, Index n, Index rep) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  ConsistencyRun run;
  run.n = n;
  run.repetition = rep;
  run.schedule = rate_schedule(n, config.d, config.eps, config.lipschitz, config.kappa,
                               config.variant);
  const std::uint64_t rep_seed = splitmix64(config.seed ^ splitmix64(rep + 1));
  try {
    const auto data = make_sine_1d(n, config.lo, config.hi, splitmix64(rep_seed ^ n));
    const NeighborGraph graph = build_epsilon_graph(data, run.schedule.bandwidth, 1);
    run.isolated = graph.isolated_count();
    const NormalizedOperator op(graph, Normalization::RandomWalk);
    SolverConfig solver;
    solver.alpha = run.schedule.alpha;
    solver.tolerance = config.tolerance;
    solver.max_iterations = 4 * solver.iteration_limit(n);

    FeedbackOracle oracle(data, rep_seed);
    const auto events = draw_events(oracle, run.schedule.budget, splitmix64(rep_seed + 7));

    // Linearity: one solve per class with the summed seed indicators.
    const auto cols = static_cast<Eigen::Index>(data.num_classes());
    const auto rows = static_cast<Eigen::Index>(n);
    Matrix scores(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      Vector rhs = Vector::Zero(rows);
      for (const auto& e : events)
        if (static_cast<Eigen::Index>(e.label) == c) rhs(static_cast<Eigen::Index>(e.point)) += 1.0;
      scores.col(c) = (1.0 - solver.alpha) * solve_heat_system(op, solver, rhs);
    }

    const Matrix& truth = data.truth();
    double max_err = 0.0, sum_err = 0.0;
    for (Eigen::Index q = 0; q < rows; ++q) {
      const double mass = scores.row(q).sum();
      Eigen::RowVectorXd p = Eigen::RowVectorXd::Constant(cols, 1.0 / static_cast<double>(cols));
      if (mass > 0.0) p = scores.row(q) / mass;
      const double err = (p - truth.row(q)).norm();
      max_err = std::max(max_err, err);
      sum_err += err;
    }
    run.max_error = max_err;
    run.mean_error = sum_err / static_cast<double>(n);

    // Heat-kernel row sums on a random non-isolated row.
    if (run.isolated < n) {
      Rng pick(rep_seed, 3);
      Index q = 0;
      do {
        q = static_cast<Index>(pick.below(n));
      } while (graph.adjacency.row_begin(q) == graph.adjacency.row_end(q));
      const Vector sums = solve_heat_system(op, solver, Vector::Ones(rows));
      run.row_sum_error =
          std::abs(sums(static_cast<Eigen::Index>(q)) * (1.0 - solver.alpha) - 1.0);
    }
  } catch (const Error& e) {
    run.ok = false;
    run.note = e.what();
  }
  run.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  return run;
}

}  // namespace

ConsistencyResult consistency_experiment(const ConsistencyConfig& config) {
  if (config.ns.empty()) throw ValidationError("consistency harness needs at least one n");
  if (!std::is_sorted(config.ns.begin(), config.ns.end()))
    throw ValidationError("ns must be ascending");
  if (config.d != 1) throw ValidationError("the sine target is one-dimensional (d = 1)");
  if (config.repetitions < 1) throw ValidationError("repetitions must be positive");
  if (!(config.lo < config.hi)) throw ValidationError("domain requires lo < hi");

  const Index reps = config.repetitions;
  ConsistencyResult result;
  result.runs.resize(config.ns.size() * reps);
  parallel_for(
      result.runs.size(),
      [&](std::size_t t) { result.runs[t] = run_once(config, config.ns[t / reps], t % reps); },
      config.threads);

  for (std::size_t k = 0; k < config.ns.size(); ++k) {
    ConsistencySummary s;
    s.n = config.ns[k];
    for (Index r = 0; r < reps; ++r) {
      const auto& run = result.runs[k * reps + r];
      if (!run.ok) continue;
      ++s.completed;
      s.mean_max_error += run.max_error;
      s.mean_mean_error += run.mean_error;
    }
    if (s.completed > 0) {
      s.mean_max_error /= static_cast<double>(s.completed);
      s.mean_mean_error /= static_cast<double>(s.completed);
    }
    result.summary.push_back(s);
  }
  return result;
}

void write_consistency_table(const ConsistencyResult& result, std::ostream& out) {
  out << "# rng: " << Rng::kAlgorithm << '\n';
  out << "n,repetition,budget,alpha,path_length,bandwidth,max_error,mean_error,isolated,"
         "row_sum_error,wall_ms,status\n";
  for (const auto& r : result.runs) {
    out << r.n << ',' << r.repetition << ',' << r.schedule.budget << ','
        << detail::format_double(r.schedule.alpha) << ',' << r.schedule.path_length << ','
        << detail::format_double(r.schedule.bandwidth) << ','
        << detail::format_double(r.max_error) << ',' << detail::format_double(r.mean_error)
        << ',' << r.isolated << ',' << detail::format_double(r.row_sum_error) << ','
        << detail::format_double(r.wall_ms) << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
}

}  // namespace pls
