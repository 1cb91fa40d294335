#include "pls/service.hpp"

#include "pls/uncertainty.hpp"
#include "session_store.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace pls {

namespace fs = std::filesystem;
using detail::HttpError;
using detail::Session;
using nlohmann::json;

ServiceLimits load_service_limits(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open service config " + path.string());
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("service config is not valid JSON: ") + e.what());
  }
  ServiceLimits limits;
  try {
    limits.max_points = cfg.value("max_points", limits.max_points);
    limits.max_sessions = cfg.value("max_sessions", limits.max_sessions);
    limits.cache_bytes = cfg.value("cache_bytes", limits.cache_bytes);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad service config: ") + e.what());
  }
  return limits;
}

namespace {

ServiceResponse reply(int status, const json& body) { return {status, body.dump()}; }

ServiceResponse error_reply(int status, const std::string& message) {
  return reply(status, json{{"error", message}});
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

std::optional<std::string> query_value(const ServiceRequest& r, const std::string& key) {
  const auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

Index query_index(const ServiceRequest& r, const std::string& key, Index fallback) {
  const auto v = query_value(r, key);
  if (!v) return fallback;
  Index out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ValidationError("query parameter '" + key + "' must be a nonnegative integer");
  return out;
}

double query_double(const ServiceRequest& r, const std::string& key, double fallback) {
  const auto v = query_value(r, key);
  if (!v) return fallback;
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ValidationError("query parameter '" + key + "' must be a number");
  return out;
}

bool query_flag(const ServiceRequest& r, const std::string& key) {
  const auto v = query_value(r, key);
  return v && (*v == "1" || *v == "true");
}

struct Page {
  Index begin = 0;
  Index end = 0;
};

Page page(const ServiceRequest& r, Index total) {
  const Index offset = std::min(query_index(r, "offset", 0), total);
  const Index limit = query_index(r, "limit", total);
  return {offset, offset + std::min(limit, total - offset)};
}

std::string json_string(const json& value, const char* field) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw ValidationError(std::string("'") + field + "' must be a string");
}

}  // namespace

struct AnnotationService::Impl {
  explicit Impl(ServiceOptions opts)
      : options(std::move(opts)), store(options.limits, options.state_dir, options.threads) {}

  ServiceOptions options;
  detail::SessionStore store;
  httplib::Server server;
  std::thread worker;
  bool bound = false;

  ServiceResponse dispatch(const ServiceRequest& r);
  ServiceResponse create_session(const ServiceRequest& r);
  ServiceResponse describe(const Session& s);
  ServiceResponse annotate(Session& s, const ServiceRequest& r);
  ServiceResponse estimates(const Session& s, const ServiceRequest& r);
  ServiceResponse uncertainty(const Session& s, const ServiceRequest& r);
  ServiceResponse suggestions(const Session& s, const ServiceRequest& r);
  ServiceResponse points(const Session& s, const ServiceRequest& r);
  ServiceResponse events(const Session& s);
};

ServiceResponse AnnotationService::Impl::dispatch(const ServiceRequest& r) {
  const auto parts = split_path(r.path);
  if (parts.empty() || parts[0] != "sessions") return error_reply(404, "no such route");
  if (parts.size() == 1) {
    if (r.method != "POST") return error_reply(405, "use POST to create a session");
    return create_session(r);
  }
  const auto session = store.find(std::string(parts[1]));
  if (!session) return error_reply(404, "unknown session '" + std::string(parts[1]) + "'");
  if (parts.size() == 2) {
    if (r.method != "GET") return error_reply(405, "method not allowed");
    return describe(*session);
  }
  if (parts.size() != 3) return error_reply(404, "no such route");
  const auto what = parts[2];
  if (what == "annotations") {
    if (r.method != "POST") return error_reply(405, "use POST to annotate");
    return annotate(*session, r);
  }
  if (r.method != "GET") return error_reply(405, "method not allowed");
  if (what == "estimates") return estimates(*session, r);
  if (what == "uncertainty") return uncertainty(*session, r);
  if (what == "suggestions") return suggestions(*session, r);
  if (what == "points") return points(*session, r);
  if (what == "events") return events(*session);
  return error_reply(404, "no such route");
}

ServiceResponse AnnotationService::Impl::create_session(const ServiceRequest& r) {
  json body;
  try {
    body = r.body.empty() ? json::object() : json::parse(r.body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("invalid JSON: ") + e.what());
  }
  const auto config = detail::session_config_from_json(body);

  std::shared_ptr<const EmbeddedDataset> dataset;
  std::string path_ref;
  if (body.contains("dataset_path")) {
    const fs::path p = json_string(body.at("dataset_path"), "dataset_path");
    if (!fs::exists(p)) throw ValidationError("dataset file not found: " + p.string());
    dataset = std::make_shared<const EmbeddedDataset>(load_dataset(p, format_for_path(p)));
    path_ref = fs::absolute(p).string();
  } else if (body.contains("dataset")) {
    const auto& upload = body.at("dataset");
    if (!upload.is_object() || !upload.contains("content"))
      throw ValidationError("'dataset' must be an object with a 'content' field");
    std::istringstream in(json_string(upload.at("content"), "content"));
    dataset = std::make_shared<const EmbeddedDataset>(read_delimited_dataset(in));
  } else {
    throw ValidationError("request needs 'dataset_path' or an uploaded 'dataset'");
  }

  const auto session = store.create(std::move(dataset), std::move(path_ref), config);
  return reply(201, json{{"session_id", session->id},
                         {"n", session->dataset->size()},
                         {"dim", session->dataset->dim()},
                         {"num_classes", session->config.num_classes}});
}

ServiceResponse AnnotationService::Impl::describe(const Session& s) {
  std::shared_lock lock(s.data);
  return reply(200, json{{"session_id", s.id},
                         {"n", s.dataset->size()},
                         {"dim", s.dataset->dim()},
                         {"num_classes", s.config.num_classes},
                         {"class_names", s.dataset->class_names()},
                         {"annotations", s.state->log().size()},
                         {"next_sequence", s.state->next_sequence()},
                         {"dataset", s.dataset_path.empty() ? "upload" : s.dataset_path},
                         {"config", detail::to_json(s.config)},
                         {"created", s.created},
                         {"updated", s.updated}});
}

ServiceResponse AnnotationService::Impl::annotate(Session& s, const ServiceRequest& r) {
  json body;
  try {
    body = json::parse(r.body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("invalid JSON: ") + e.what());
  }
  if (!body.is_object() || !body.contains("point_id") || !body.contains("class"))
    return error_reply(400, "annotation needs 'point_id' and 'class'");
  const auto id = json_string(body.at("point_id"), "point_id");
  const auto point = s.dataset->find(id);
  if (!point) return error_reply(404, "unknown point '" + id + "'");
  if (!body.at("class").is_number_integer() || body.at("class").get<long long>() < 0)
    return error_reply(400, "'class' must be a nonnegative integer");
  const auto label = body.at("class").get<Index>();
  if (label >= s.config.num_classes)
    return error_reply(400, "class " + std::to_string(label) + " out of range");

  std::unique_lock writer(s.writer, std::try_to_lock);
  if (!writer.owns_lock()) return error_reply(409, "another annotation is in progress; retry");

  AnnotationEvent event;
  Vector before;
  Index changed = 0;
  json estimate;
  double mass = 0.0;
  {
    std::unique_lock lock(s.data);
    before = s.state->received();
    event = s.state->annotate(*point, label, AnnotationSource::Human);
    store.persist_event(s, event);
    s.updated = detail::unix_now();
    const Vector& after = s.state->received();
    for (Eigen::Index i = 0; i < after.size(); ++i) changed += std::abs(after(i) - before(i)) > 1e-6;
    const auto est = s.state->estimates();
    const auto q = static_cast<Eigen::Index>(*point);
    estimate = json::array();
    for (Eigen::Index c = 0; c < est.probabilities.cols(); ++c)
      estimate.push_back(est.probabilities(q, c));
    mass = est.received(q);
  }
  return reply(200, json{{"sequence", event.sequence},
                         {"point_id", id},
                         {"class", label},
                         {"estimate", estimate},
                         {"received_mass", mass},
                         {"changed_points", changed}});
}

ServiceResponse AnnotationService::Impl::estimates(const Session& s, const ServiceRequest& r) {
  std::shared_lock lock(s.data);
  const auto est = s.state->estimates();
  const auto pg = page(r, est.size());
  json rows = json::array();
  for (Index q = pg.begin; q < pg.end; ++q) {
    const auto i = static_cast<Eigen::Index>(q);
    std::vector<double> p(est.probabilities.row(i).begin(), est.probabilities.row(i).end());
    rows.push_back({{"id", s.dataset->ids()[q]}, {"probabilities", p}, {"received_mass", est.received(i)}});
  }
  return reply(200, json{{"total", est.size()},
                         {"offset", pg.begin},
                         {"sequence", s.state->next_sequence() - 1},
                         {"rows", std::move(rows)}});
}

ServiceResponse AnnotationService::Impl::uncertainty(const Session& s, const ServiceRequest& r) {
  const auto method = parse_interval_method(query_value(r, "method").value_or("wilson"));
  const double z = query_double(r, "z", 1.96);
  const double delta = query_double(r, "delta", 0.05);
  const bool union_bound = query_flag(r, "union_bound");
  std::shared_lock lock(s.data);
  if (method == IntervalMethod::Hoeffding && !s.state->has_lipschitz())
    throw ValidationError("hoeffding intervals need a session created with 'lipschitz'");
  const auto pg = page(r, s.state->size());
  json rows = json::array();
  for (Index q = pg.begin; q < pg.end; ++q) {
    json intervals = json::array();
    for (Index c = 0; c < s.state->num_classes(); ++c) {
      const auto ci = method == IntervalMethod::Wilson ? wilson_ci(*s.state, q, c, z)
                                                       : hoeffding_ci(*s.state, q, c, delta, union_bound);
      intervals.push_back({{"class", c},
                           {"lower", ci.lower},
                           {"upper", ci.upper},
                           {"informative", ci.informative}});
    }
    rows.push_back({{"id", s.dataset->ids()[q]}, {"intervals", std::move(intervals)}});
  }
  const double level = method == IntervalMethod::Wilson ? std::erf(z / std::sqrt(2.0)) : 1.0 - delta;
  return reply(200, json{{"method", to_string(method)},
                         {"level", level},
                         {"total", s.state->size()},
                         {"offset", pg.begin},
                         {"rows", std::move(rows)}});
}

ServiceResponse AnnotationService::Impl::suggestions(const Session& s, const ServiceRequest& r) {
  std::shared_lock lock(s.data);
  const Vector& mass = s.state->received();
  const Index n = s.state->size();
  const Index count = std::min(query_index(r, "count", 10), n);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](Index a, Index b) {
                      const double ma = mass(static_cast<Eigen::Index>(a));
                      const double mb = mass(static_cast<Eigen::Index>(b));
                      return ma < mb || (ma == mb && a < b);
                    });
  json ids = json::array();
  json masses = json::array();
  for (Index i = 0; i < count; ++i) {
    ids.push_back(s.dataset->ids()[order[i]]);
    masses.push_back(mass(static_cast<Eigen::Index>(order[i])));
  }
  return reply(200, json{{"point_ids", std::move(ids)}, {"received_mass", std::move(masses)}});
}

ServiceResponse AnnotationService::Impl::points(const Session& s, const ServiceRequest& r) {
  if (s.dataset->dim() != 2)
    return error_reply(400, "points are only served for 2-D datasets; use the command-line tools");
  const auto pg = page(r, s.dataset->size());
  json rows = json::array();
  for (Index q = pg.begin; q < pg.end; ++q) {
    const auto i = static_cast<Eigen::Index>(q);
    rows.push_back({{"id", s.dataset->ids()[q]},
                    {"x", s.dataset->features()(i, 0)},
                    {"y", s.dataset->features()(i, 1)}});
  }
  return reply(200, json{{"total", s.dataset->size()}, {"offset", pg.begin}, {"rows", std::move(rows)}});
}

ServiceResponse AnnotationService::Impl::events(const Session& s) {
  std::shared_lock lock(s.data);
  json rows = json::array();
  for (const auto& e : s.state->log())
    rows.push_back({{"sequence", e.sequence},
                    {"point_id", s.dataset->ids()[e.point]},
                    {"class", e.label},
                    {"source", to_string(e.source)}});
  return reply(200, json{{"events", std::move(rows)}});
}

AnnotationService::AnnotationService(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    ServiceRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const auto out = handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  impl_->server.Get(R"(/sessions.*)", route);
  impl_->server.Post(R"(/sessions.*)", route);
}

AnnotationService::~AnnotationService() { stop(); }

ServiceResponse AnnotationService::handle(const ServiceRequest& request) {
  try {
    return impl_->dispatch(request);
  } catch (const HttpError& e) {
    return error_reply(e.status(), e.what());
  } catch (const ValidationError& e) {
    return error_reply(400, e.what());
  } catch (const ParseError& e) {
    return error_reply(400, e.what());
  } catch (const SolverError& e) {
    return error_reply(500, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

int AnnotationService::bind() {
  const auto& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) throw Error("cannot bind " + o.host);
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    throw Error("cannot bind " + o.host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void AnnotationService::serve() {
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

void AnnotationService::start() {
  if (!impl_->bound) bind();
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void AnnotationService::stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

std::size_t AnnotationService::session_count() const { return impl_->store.size(); }

}  // namespace pls
