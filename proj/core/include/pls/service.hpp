#pragma once

#include "pls/types.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace pls {

struct ServiceLimits {
  /// Largest dataset a session may hold; larger uploads get 507.
  Index max_points = 200000;
  /// Live sessions; creation beyond this gets 507.
  std::size_t max_sessions = 64;
  /// Per-session propagation cache.
  std::size_t cache_bytes = std::size_t{64} << 20;
};

/// Reads {"max_points": .., "max_sessions": .., "cache_bytes": ..}; absent
/// keys keep their defaults.
ServiceLimits load_service_limits(const std::filesystem::path& path);

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceLimits limits;
  /// When set, sessions are persisted here as {session.json, events.csv} and
  /// rebuilt by replay at startup.
  std::optional<std::filesystem::path> state_dir;
  unsigned threads = 0;
};

/// Transport-independent request/response pair so the routing can be
/// exercised without sockets.
struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Live labeling sessions over HTTP/JSON.
///
///   POST /sessions                         create (201)
///   GET  /sessions/{id}                    metadata
///   POST /sessions/{id}/annotations        {"point_id", "class"}
///   GET  /sessions/{id}/estimates          ?offset=&limit=
///   GET  /sessions/{id}/uncertainty        ?method=wilson|hoeffding&z=&delta=&union_bound=
///   GET  /sessions/{id}/suggestions        ?count=
///   GET  /sessions/{id}/points             2-D features
///   GET  /sessions/{id}/events             event log (text/csv layout in JSON)
///
/// Each session has one writer at a time; a second concurrent annotation
/// gets 409 and should be retried. Reads run concurrently.
class AnnotationService {
public:
  explicit AnnotationService(ServiceOptions options);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  ServiceResponse handle(const ServiceRequest& request);

  /// Binds the listening socket and returns the bound port (useful with port 0).
  int bind();
  /// Serves until stop(); call bind() first.
  void serve();
  /// Runs serve() on a background thread.
  void start();
  void stop();

  std::size_t session_count() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pls
