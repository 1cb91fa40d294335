#include "session_store.hpp"

#include "pls/annotation.hpp"
#include "pls/rng.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace pls::detail {

namespace fs = std::filesystem;
using nlohmann::json;

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string_view to_string(GraphKind kind) { return kind == GraphKind::Knn ? "knn" : "epsilon"; }

std::string_view to_string(Normalization n) {
  return n == Normalization::Symmetric ? "symmetric" : "random_walk";
}

}  // namespace

json to_json(const SessionConfig& config) {
  json graph{{"kind", to_string(config.graph.kind)},
             {"normalization", to_string(config.graph.normalization)}};
  if (config.graph.kind == GraphKind::Knn)
    graph["k"] = config.graph.k;
  else
    graph["radius"] = config.graph.radius;
  json solver{{"alpha", config.solver.alpha}, {"tolerance", config.solver.tolerance}};
  if (config.solver.max_iterations) solver["max_iterations"] = *config.solver.max_iterations;
  json out{{"graph", graph}, {"solver", solver}, {"num_classes", config.num_classes}};
  if (config.lipschitz) out["lipschitz"] = *config.lipschitz;
  return out;
}

SessionConfig session_config_from_json(const json& body) {
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  SessionConfig c;
  if (body.contains("graph")) {
    const auto& g = body.at("graph");
    if (!g.is_object()) throw ValidationError("'graph' must be an object");
    const auto kind = get_or<std::string>(g, "kind", "knn");
    if (kind == "knn")
      c.graph.kind = GraphKind::Knn;
    else if (kind == "epsilon")
      c.graph.kind = GraphKind::Epsilon;
    else
      throw ValidationError("unknown graph kind '" + kind + "'");
    const auto k = get_or<long long>(g, "k", 5);
    if (k < 1) throw ValidationError("k must be positive");
    c.graph.k = static_cast<Index>(k);
    c.graph.radius = get_or<double>(g, "radius", 0.0);
    if (c.graph.kind == GraphKind::Epsilon && !(c.graph.radius > 0.0))
      throw ValidationError("epsilon graphs need a positive radius");
    const auto norm = get_or<std::string>(g, "normalization", "symmetric");
    if (norm == "symmetric")
      c.graph.normalization = Normalization::Symmetric;
    else if (norm == "random_walk")
      c.graph.normalization = Normalization::RandomWalk;
    else
      throw ValidationError("unknown normalization '" + norm + "'");
  }
  if (body.contains("solver")) {
    const auto& s = body.at("solver");
    if (!s.is_object()) throw ValidationError("'solver' must be an object");
    c.solver.alpha = get_or<double>(s, "alpha", c.solver.alpha);
    c.solver.tolerance = get_or<double>(s, "tolerance", c.solver.tolerance);
    if (s.contains("max_iterations")) c.solver.max_iterations = get_or<int>(s, "max_iterations", 0);
  }
  c.solver.validate();
  const auto classes = get_or<long long>(body, "num_classes", 0);
  if (classes < 0) throw ValidationError("num_classes must be positive");
  c.num_classes = static_cast<Index>(classes);  // 0: decided from the dataset
  if (body.contains("lipschitz") && !body.at("lipschitz").is_null()) {
    c.lipschitz = get_or<double>(body, "lipschitz", 0.0);
    if (!(*c.lipschitz >= 0.0)) throw ValidationError("lipschitz must be nonnegative");
  }
  return c;
}

SessionStore::SessionStore(ServiceLimits limits, std::optional<fs::path> state_dir,
                           unsigned threads)
    : limits_(limits), state_dir_(std::move(state_dir)), threads_(threads) {
  std::random_device rd;
  id_salt_ = (std::uint64_t{rd()} << 32) ^ rd() ^ static_cast<std::uint64_t>(unix_now());
  if (!state_dir_) return;
  fs::create_directories(*state_dir_);
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(*state_dir_))
    if (entry.is_directory() && fs::exists(entry.path() / "session.json"))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) restore(dir);
}

std::string SessionStore::fresh_id() {
  for (;;) {
    const std::uint64_t raw = splitmix64(id_salt_ + ++id_counter_);
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << raw;
    if (!sessions_.contains(out.str())) return out.str();
  }
}

std::shared_ptr<Session> SessionStore::build(std::shared_ptr<const EmbeddedDataset> dataset,
                                             std::string dataset_path,
                                             const SessionConfig& config) const {
  if (dataset->size() > limits_.max_points)
    throw HttpError(507, "dataset has " + std::to_string(dataset->size()) +
                             " points; capacity is " + std::to_string(limits_.max_points));
  auto s = std::make_shared<Session>();
  s->dataset = std::move(dataset);
  s->dataset_path = std::move(dataset_path);
  s->config = config;
  if (s->config.num_classes == 0) {
    if (s->dataset->has_truth())
      s->config.num_classes = s->dataset->num_classes();
    else if (!s->dataset->class_names().empty())
      s->config.num_classes = static_cast<Index>(s->dataset->class_names().size());
    else
      s->config.num_classes = 2;
  }
  auto op = std::make_shared<const NormalizedOperator>(
      build_graph(*s->dataset, s->config.graph, threads_), s->config.graph.normalization);
  std::optional<LipschitzContext> lip;
  if (s->config.lipschitz) lip = LipschitzContext{s->dataset, *s->config.lipschitz};
  s->state = std::make_unique<SpreadSession>(std::move(op), s->config.solver,
                                             s->config.num_classes, lip, limits_.cache_bytes);
  s->created = s->updated = unix_now();
  return s;
}

std::shared_ptr<Session> SessionStore::create(std::shared_ptr<const EmbeddedDataset> dataset,
                                              std::string dataset_path,
                                              const SessionConfig& config) {
  {
    std::shared_lock lock(mutex_);
    if (sessions_.size() >= limits_.max_sessions)
      throw HttpError(507, "session capacity reached");
  }
  // The graph build is the slow part; do it outside the store lock.
  auto session = build(std::move(dataset), std::move(dataset_path), config);
  std::unique_lock lock(mutex_);
  if (sessions_.size() >= limits_.max_sessions) throw HttpError(507, "session capacity reached");
  session->id = fresh_id();
  persist_session(*session);
  sessions_.emplace(session->id, session);
  return session;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

void SessionStore::persist_session(const Session& session) const {
  if (!state_dir_) return;
  const fs::path dir = *state_dir_ / session.id;
  fs::create_directories(dir);
  json meta{{"id", session.id}, {"config", to_json(session.config)}, {"created", session.created}};
  if (session.dataset_path.empty()) {
    save_dataset(*session.dataset, dir / "dataset.plsd", DatasetFormat::PackedBinary);
    meta["dataset"] = "dataset.plsd";
  } else {
    meta["dataset"] = session.dataset_path;
  }
  std::ofstream(dir / "session.json") << meta.dump(2) << '\n';
  std::ofstream events(dir / "events.csv");
  write_event_log({}, *session.dataset, events);
}

void SessionStore::persist_event(const Session& session, const AnnotationEvent& event) const {
  if (!state_dir_) return;
  std::ofstream out(*state_dir_ / session.id / "events.csv", std::ios::app);
  out << event.sequence << ',' << session.dataset->ids().at(event.point) << ',' << event.label
      << ',' << to_string(event.source) << '\n';
  out.flush();
  if (!out) throw Error("failed to persist annotation for session " + session.id);
}

void SessionStore::restore(const fs::path& dir) {
  json meta;
  try {
    std::ifstream in(dir / "session.json");
    meta = json::parse(in);
    const auto ref = meta.at("dataset").get<std::string>();
    const fs::path data_path = fs::path(ref).is_absolute() ? fs::path(ref) : dir / ref;
    auto dataset = std::make_shared<const EmbeddedDataset>(
        load_dataset(data_path, format_for_path(data_path)));
    const auto config = session_config_from_json(meta.at("config"));
    auto session = build(std::move(dataset), fs::path(ref).is_absolute() ? ref : std::string(),
                         config);
    session->id = meta.at("id").get<std::string>();
    session->created = meta.value("created", session->created);
    std::ifstream events_in(dir / "events.csv");
    const auto events = read_event_log(events_in, *session->dataset);
    session->state->apply_all(events, false, threads_);
    sessions_.emplace(session->id, std::move(session));
  } catch (const std::exception& e) {
    throw Error("cannot restore session from " + dir.string() + ": " + e.what());
  }
}

}  // namespace pls::detail
