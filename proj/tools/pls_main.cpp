// pls: dataset generation, graph building, budgeted experiments, interval
// reports, the consistency harness and the annotation service.

#include "pls/baselines.hpp"
#include "pls/error.hpp"
#include "pls/experiment.hpp"
#include "pls/parallel.hpp"
#include "pls/service.hpp"
#include "pls/simulation.hpp"
#include "pls/spreading.hpp"
#include "pls/theory.hpp"
#include "pls/uncertainty.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace fs = std::filesystem;

namespace {

// Opens `path` for writing, or returns std::cout for "-".
class Output {
public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw pls::Error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

struct GraphOptions {
  std::string kind = "knn";
  pls::Index k = 5;
  double radius = 0.0;
  std::string normalization = "symmetric";

  void add(CLI::App* cmd) {
    cmd->add_option("--graph", kind, "Graph kind")->check(CLI::IsMember({"knn", "epsilon"}));
    cmd->add_option("-k,--k", k, "Neighbors per point for knn graphs");
    cmd->add_option("--radius", radius, "Edge radius for epsilon graphs");
    cmd->add_option("--normalization", normalization, "Operator normalization")
        ->check(CLI::IsMember({"symmetric", "random_walk"}));
  }

  pls::GraphSpec spec() const {
    pls::GraphSpec s;
    s.kind = kind == "knn" ? pls::GraphKind::Knn : pls::GraphKind::Epsilon;
    s.k = k;
    s.radius = radius;
    s.normalization = normalization == "symmetric" ? pls::Normalization::Symmetric
                                                   : pls::Normalization::RandomWalk;
    if (s.kind == pls::GraphKind::Epsilon && !(radius > 0.0))
      throw pls::ValidationError("--radius must be positive for epsilon graphs");
    return s;
  }
};

struct SolverOptions {
  double alpha = 0.9;
  double tolerance = 1e-6;
  int max_iterations = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Spreading intensity in [0, 1)");
    cmd->add_option("--tolerance", tolerance, "Relative residual bound");
    cmd->add_option("--max-iterations", max_iterations, "Iteration cap (default 10 sqrt(n) + 100)");
  }

  pls::SolverConfig config() const {
    pls::SolverConfig c;
    c.alpha = alpha;
    c.tolerance = tolerance;
    if (max_iterations > 0) c.max_iterations = max_iterations;
    c.validate();
    return c;
  }
};

pls::EmbeddedDataset load(const std::string& path) {
  return pls::load_dataset(path, pls::format_for_path(path));
}

std::vector<pls::AnnotationEvent> load_events(const std::string& path,
                                              const pls::EmbeddedDataset& data) {
  std::ifstream in(path);
  if (!in) throw pls::Error("cannot open event log " + path);
  return pls::read_event_log(in, data);
}

pls::Index class_count(const pls::EmbeddedDataset& data, pls::Index requested) {
  if (requested > 0) return requested;
  if (data.has_truth()) return data.num_classes();
  if (!data.class_names().empty()) return static_cast<pls::Index>(data.class_names().size());
  return 2;
}

pls::AnnotationService* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic label spreading toolkit"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: PLS_NUM_THREADS or hardware)");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  std::string gen_kind, gen_out;
  pls::Index gen_n = 1000;
  double noise = 0.1, sharpness = pls::kDefaultMoonSharpness, lo = 0.0, hi = 10.0;
  std::uint64_t seed = 0;
  gen->add_option("kind", gen_kind, "Dataset family")
      ->required()
      ->check(CLI::IsMember({"two-moons", "sine1d"}));
  gen->add_option("--n", gen_n, "Number of points");
  gen->add_option("--noise", noise, "Two-moons Gaussian noise");
  gen->add_option("--sharpness", sharpness, "Two-moons logistic sharpness of the soft labels");
  gen->add_option("--lo", lo, "Sine domain lower end");
  gen->add_option("--hi", hi, "Sine domain upper end");
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("-o,--out", gen_out, "Output file (.csv text, otherwise packed binary)")->required();

  // graph
  auto* graph_cmd = app.add_subcommand("graph", "Build a neighbor graph and report its shape");
  std::string data_path, out_path = "-";
  GraphOptions graph_opts;
  graph_cmd->add_option("--data", data_path, "Dataset file")->required();
  graph_opts.add(graph_cmd);
  graph_cmd->add_option("-o,--out", out_path, "Edge list output (\"-\" for stdout)");

  // run
  auto* run = app.add_subcommand("run", "Budgeted simulated-annotation experiment");
  SolverOptions solver_opts;
  std::string estimator = "pls", events_out, estimates_out;
  std::vector<std::string> budgets;
  double gamma = 1.0, kl_floor = 1e-9;
  pls::Index knn_k = 5, repetitions = 1;
  run->add_option("--data", data_path, "Dataset file with ground truth")->required();
  graph_opts.add(run);
  solver_opts.add(run);
  run->add_option("--estimator", estimator, "Estimator")
      ->check(CLI::IsMember({"pls", "gkr", "knn", "histogram"}));
  run->add_option("--gamma", gamma, "Kernel width for gkr");
  run->add_option("--knn-k", knn_k, "Neighbors for the knn baseline");
  run->add_option("--budget", budgets, "Budgets: counts, fractions (0.1) or percentages (10%)")
      ->required()
      ->delimiter(',');
  run->add_option("--repetitions", repetitions, "Independent repetitions");
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--kl-floor", kl_floor, "Probability floor for KL divergence");
  run->add_option("-o,--out", out_path, "Experiment records (\"-\" for stdout)");
  run->add_option("--events-out", events_out, "Event log of repetition 0");
  run->add_option("--estimates-out", estimates_out,
                  "Estimates of repetition 0 at the largest budget");

  // ci
  auto* ci = app.add_subcommand("ci", "Per-point confidence intervals for a session state");
  std::string events_path, method = "wilson";
  double z = 1.96, delta = 0.05, lipschitz = 0.0;
  bool union_bound = false;
  pls::Index classes = 0;
  ci->add_option("--data", data_path, "Dataset file")->required();
  graph_opts.add(ci);
  solver_opts.add(ci);
  ci->add_option("--events", events_path, "Event log to replay (omit for a fresh state)");
  ci->add_option("--method", method, "Interval method")
      ->check(CLI::IsMember({"wilson", "hoeffding"}));
  ci->add_option("--z", z, "Wilson critical value");
  ci->add_option("--delta", delta, "Hoeffding failure probability");
  ci->add_option("--lipschitz", lipschitz, "Lipschitz constant of the soft labels (hoeffding)");
  ci->add_flag("--union-bound", union_bound, "Split delta across classes");
  ci->add_option("--classes", classes, "Number of classes when the dataset has no truth");
  ci->add_option("-o,--out", out_path, "Report output (\"-\" for stdout)");

  // replay
  auto* replay = app.add_subcommand("replay", "Rebuild estimates from an event log");
  replay->add_option("--data", data_path, "Dataset file")->required();
  graph_opts.add(replay);
  solver_opts.add(replay);
  replay->add_option("--events", events_path, "Event log")->required();
  replay->add_option("--classes", classes, "Number of classes when the dataset has no truth");
  replay->add_option("-o,--out", out_path, "Estimates output (\"-\" for stdout)");

  // consistency
  auto* cons = app.add_subcommand("consistency", "Rate-schedule consistency harness on sine-1D");
  pls::ConsistencyConfig cc;
  std::vector<pls::Index> ns{500, 2000, 8000};
  std::string variant = "proof_body";
  cons->add_option("--ns", ns, "Dataset sizes, ascending")->delimiter(',');
  cons->add_option("--d", cc.d, "Input dimension (1 only)");
  cons->add_option("--eps", cc.eps, "Target accuracy");
  cons->add_option("--lipschitz", cc.lipschitz, "Lipschitz constant used by theorem_statement");
  cons->add_option("--kappa", cc.kappa, "Budget constant");
  cons->add_option("--variant", variant, "Schedule constants")
      ->check(CLI::IsMember({"proof_body", "theorem_statement"}));
  cons->add_option("--repetitions", cc.repetitions, "Repetitions per n");
  cons->add_option("--seed", seed, "RNG seed");
  cons->add_option("--lo", cc.lo, "Domain lower end");
  cons->add_option("--hi", cc.hi, "Domain upper end");
  cons->add_option("-o,--out", out_path, "Table output (\"-\" for stdout)");

  // schedule
  auto* sched = app.add_subcommand("schedule", "Print the rate schedule for one n");
  pls::Index sched_n = 1024, sched_d = 1;
  double sched_eps = 0.1, sched_l = 1.0, sched_kappa = 1.0;
  sched->add_option("--n", sched_n, "Dataset size")->required();
  sched->add_option("--d", sched_d, "Input dimension");
  sched->add_option("--eps", sched_eps, "Target accuracy");
  sched->add_option("--lipschitz", sched_l, "Lipschitz constant");
  sched->add_option("--kappa", sched_kappa, "Budget constant");
  sched->add_option("--variant", variant, "Schedule constants")
      ->check(CLI::IsMember({"proof_body", "theorem_statement"}));

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP annotation service");
  pls::ServiceOptions svc;
  std::string limits_path, state_dir;
  serve->add_option("--host", svc.host, "Bind address");
  serve->add_option("--port", svc.port, "Port (0 picks a free one)");
  serve->add_option("--config", limits_path, "JSON capacity limits");
  serve->add_option("--state-dir", state_dir, "Directory for persisted sessions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads == 0) threads = pls::default_thread_count();

    if (*gen) {
      const auto data = gen_kind == "two-moons" ? pls::make_two_moons(gen_n, noise, sharpness, seed)
                                                : pls::make_sine_1d(gen_n, lo, hi, seed);
      pls::save_dataset(data, gen_out, pls::format_for_path(gen_out));
      std::cerr << "wrote " << data.size() << " points to " << gen_out << '\n';
    } else if (*graph_cmd) {
      const auto data = load(data_path);
      const auto g = pls::build_graph(data, graph_opts.spec(), threads);
      Output out(out_path);
      pls::write_edge_list(g, out.stream());
      std::cerr << "n=" << g.size() << " edges=" << g.adjacency.nnz() / 2
                << " sigma2=" << g.sigma2 << " isolated=" << g.isolated_count() << '\n';
    } else if (*run) {
      const auto data = load(data_path);
      pls::ExperimentConfig config;
      config.graph = graph_opts.spec();
      config.solver = solver_opts.config();
      config.estimator = pls::parse_estimator(estimator);
      config.gamma = gamma;
      config.knn_k = knn_k;
      config.repetitions = repetitions;
      config.seed = seed;
      config.kl_floor = kl_floor;
      config.threads = threads;
      for (const auto& b : budgets) config.budgets.push_back(pls::resolve_budget(b, data.size()));
      std::sort(config.budgets.begin(), config.budgets.end());
      config.budgets.erase(std::unique(config.budgets.begin(), config.budgets.end()),
                           config.budgets.end());
      const auto records = pls::run_experiment(data, config);
      Output out(out_path);
      pls::write_experiment_records(records, out.stream());
      if (!events_out.empty() || !estimates_out.empty()) {
        const auto events = pls::repetition_events(data, config, 0);
        if (!events_out.empty()) {
          Output ev(events_out);
          pls::write_event_log(events, data, ev.stream());
        }
        if (!estimates_out.empty()) {
          const pls::AnnotationLog log{data.size(), data.num_classes(), events};
          pls::SoftLabelEstimate est;
          switch (config.estimator) {
            case pls::Estimator::Pls: {
              pls::SpreadSession s(std::make_shared<const pls::NormalizedOperator>(
                                       pls::build_graph(data, config.graph, threads),
                                       config.graph.normalization),
                                   config.solver, data.num_classes());
              s.apply_all(events, false, threads);
              est = s.estimates();
              break;
            }
            case pls::Estimator::Gkr: est = pls::gkr_estimate(data, log, gamma); break;
            case pls::Estimator::Knn: est = pls::knn_estimate(data, log, knn_k); break;
            case pls::Estimator::Histogram: est = pls::histogram_estimate(log); break;
          }
          Output eo(estimates_out);
          pls::write_estimates(est, data, eo.stream());
        }
      }
    } else if (*ci || *replay) {
      auto data = std::make_shared<const pls::EmbeddedDataset>(load(data_path));
      const auto spec = graph_opts.spec();
      auto op = std::make_shared<const pls::NormalizedOperator>(
          pls::build_graph(*data, spec, threads), spec.normalization);
      std::optional<pls::LipschitzContext> lip;
      const bool hoeffding = *ci && method == "hoeffding";
      if (hoeffding) {
        if (!(lipschitz > 0.0)) throw pls::ValidationError("hoeffding needs --lipschitz > 0");
        lip = pls::LipschitzContext{data, lipschitz};
      }
      pls::SpreadSession s(op, solver_opts.config(), class_count(*data, classes), lip);
      if (!events_path.empty()) s.apply_all(load_events(events_path, *data), false, threads);
      Output out(out_path);
      if (*replay) {
        pls::write_estimates(s.estimates(), *data, out.stream());
      } else {
        const auto m = pls::parse_interval_method(method);
        const auto rows = pls::ci_report(s, m, hoeffding ? delta : z, union_bound);
        pls::write_ci_report(rows, *data, out.stream());
        if (data->has_truth() && data->num_classes() == s.num_classes())
          std::cout << "coverage: " << pls::point_coverage(rows, data->truth()) << '\n';
      }
    } else if (*cons) {
      cc.ns = ns;
      cc.seed = seed;
      cc.variant = pls::parse_schedule_variant(variant);
      cc.threads = threads;
      const auto result = pls::consistency_experiment(cc);
      Output out(out_path);
      pls::write_consistency_table(result, out.stream());
      for (const auto& s : result.summary)
        std::cerr << "n=" << s.n << " mean_max_error=" << s.mean_max_error
                  << " completed=" << s.completed << '\n';
      std::cerr << "monotone repetitions: " << result.monotone_repetitions() << '/'
                << cc.repetitions << '\n';
    } else if (*sched) {
      const auto s = pls::rate_schedule(sched_n, sched_d, sched_eps, sched_l, sched_kappa,
                                        pls::parse_schedule_variant(variant));
      std::cout.precision(17);
      std::cout << "alpha=" << s.alpha << " path_length=" << s.path_length
                << " bandwidth=" << s.bandwidth << " budget=" << s.budget << '\n';
    } else if (*serve) {
      if (!limits_path.empty()) svc.limits = pls::load_service_limits(limits_path);
      if (!state_dir.empty()) svc.state_dir = fs::path(state_dir);
      svc.threads = threads;
      pls::AnnotationService service(svc);
      const int port = service.bind();
      std::cerr << "listening on " << svc.host << ':' << port << '\n';
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.serve();
      g_service = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
