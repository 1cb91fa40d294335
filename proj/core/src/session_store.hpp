#pragma once

#include "pls/error.hpp"
#include "pls/experiment.hpp"
#include "pls/service.hpp"
#include "pls/spreading.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace pls::detail {

/// Error carrying the HTTP status it maps to.
class HttpError : public Error {
public:
  HttpError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

private:
  int status_;
};

struct SessionConfig {
  GraphSpec graph;
  SolverConfig solver;
  Index num_classes = 2;
  std::optional<double> lipschitz;
};

nlohmann::json to_json(const SessionConfig& config);
/// Missing keys fall back to defaults; wrong types raise ValidationError.
SessionConfig session_config_from_json(const nlohmann::json& body);

struct Session {
  std::string id;
  std::shared_ptr<const EmbeddedDataset> dataset;
  /// Absolute path of the source file, or empty for uploads.
  std::string dataset_path;
  SessionConfig config;
  std::unique_ptr<SpreadSession> state;
  std::int64_t created = 0;  // unix seconds
  std::int64_t updated = 0;

  /// Held (try_lock) for the whole annotation request; a second writer gets 409.
  std::mutex writer;
  /// Exclusive while accumulators change, shared for reads.
  mutable std::shared_mutex data;
};

class SessionStore {
public:
  SessionStore(ServiceLimits limits, std::optional<std::filesystem::path> state_dir,
               unsigned threads);

  /// Builds the graph and registers an empty session. Throws HttpError(507)
  /// when over capacity and ValidationError on bad input.
  std::shared_ptr<Session> create(std::shared_ptr<const EmbeddedDataset> dataset,
                                  std::string dataset_path, const SessionConfig& config);

  std::shared_ptr<Session> find(const std::string& id) const;
  std::size_t size() const;

  /// Appends an applied event to the session's persisted log.
  void persist_event(const Session& session, const AnnotationEvent& event) const;

  const ServiceLimits& limits() const noexcept { return limits_; }
  unsigned threads() const noexcept { return threads_; }

private:
  std::string fresh_id();
  void persist_session(const Session& session) const;
  void restore(const std::filesystem::path& dir);
  std::shared_ptr<Session> build(std::shared_ptr<const EmbeddedDataset> dataset,
                                 std::string dataset_path, const SessionConfig& config) const;

  ServiceLimits limits_;
  std::optional<std::filesystem::path> state_dir_;
  unsigned threads_;

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_;
};

std::int64_t unix_now();

}  // namespace pls::detail
