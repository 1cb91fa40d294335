#include "pls/spreading.hpp"

#include "pls/error.hpp"
#include "pls/parallel.hpp"
#include "pls/rng.hpp"
#include "pls/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pls {

SpreadSession::SpreadSession(std::shared_ptr<const NormalizedOperator> op, SolverConfig config,
                             Index num_classes, std::optional<LipschitzContext> lipschitz,
                             std::size_t cache_bytes)
    : op_(std::move(op)), config_(config), lipschitz_(std::move(lipschitz)) {
  if (!op_) throw ValidationError("session requires a normalized operator");
  config_.validate();
  if (num_classes < 2) throw ValidationError("at least two classes are required");
  const auto n = static_cast<Eigen::Index>(op_->size());
  const auto c = static_cast<Eigen::Index>(num_classes);
  if (lipschitz_) {
    if (!lipschitz_->dataset || lipschitz_->dataset->size() != op_->size())
      throw ValidationError("Lipschitz context dataset does not match the graph");
    if (!(lipschitz_->constant >= 0.0) || !std::isfinite(lipschitz_->constant))
      throw ValidationError("Lipschitz constant must be finite and nonnegative");
  }
  scores_ = Matrix::Zero(n, c);
  received_ = Vector::Zero(n);
  squared_ = Vector::Zero(n);
  if (lipschitz_) bias_ = Vector::Zero(n);
  const std::size_t per_entry = std::max<std::size_t>(1, static_cast<std::size_t>(n) * sizeof(double));
  cache_capacity_ = cache_bytes / per_entry;
}

void SpreadSession::check_event(const AnnotationEvent& event) const {
  if (event.point >= size()) throw ValidationError("annotation point index out of range");
  if (event.label >= num_classes()) throw ValidationError("annotation class index out of range");
}

std::shared_ptr<const Vector> SpreadSession::lookup(Index point) const {
  const auto it = cache_.find(point);
  return it == cache_.end() ? nullptr : it->second;
}

std::shared_ptr<const Vector> SpreadSession::compute(Index point) const {
  return std::make_shared<const Vector>(spread_seed(*op_, config_, point).normalized);
}

void SpreadSession::remember(Index point, std::shared_ptr<const Vector> phi) {
  if (cache_capacity_ == 0 || cache_.count(point)) return;
  while (cache_.size() >= cache_capacity_ && !cache_order_.empty()) {
    cache_.erase(cache_order_.front());
    cache_order_.pop_front();
  }
  cache_.emplace(point, std::move(phi));
  cache_order_.push_back(point);
}

Vector SpreadSession::propagation(Index point) const {
  if (point >= size()) throw ValidationError("point index out of range");
  if (auto hit = lookup(point)) return *hit;
  return *compute(point);
}

void SpreadSession::accumulate(Index point, Index label, double weight,
                               const Vector& phi) noexcept {
  const auto c = static_cast<Eigen::Index>(label);
  scores_.col(c) += weight * phi;
  received_ += weight * phi;
  squared_ += weight * phi.cwiseAbs2();
  if (lipschitz_) {
    const EmbeddedDataset& data = *lipschitz_->dataset;
    const double lip = lipschitz_->constant;
    const auto seed = data.point(point);
    for (Eigen::Index q = 0; q < phi.size(); ++q) {
      if (phi(q) == 0.0) continue;
      const double dist = (data.point(static_cast<Index>(q)) - seed).norm();
      bias_(q) += weight * phi(q) * std::min(1.0, lip * dist);
    }
  }
}

AnnotationEvent SpreadSession::annotate(Index point, Index label, AnnotationSource source) {
  AnnotationEvent event{point, label, next_sequence_, source};
  apply(event);
  return event;
}

void SpreadSession::apply(const AnnotationEvent& event) {
  check_event(event);
  if (event.sequence < next_sequence_)
    throw ValidationError("annotation sequence numbers must increase");
  auto phi = lookup(event.point);
  if (phi) {
    ++cache_hits_;
  } else {
    phi = compute(event.point);
    ++solves_;
  }
  // Nothing below throws except allocation in the log/cache.
  log_.reserve(log_.size() + 1);
  accumulate(event.point, event.label, 1.0, *phi);
  log_.push_back(event);
  next_sequence_ = event.sequence + 1;
  remember(event.point, std::move(phi));
}

void SpreadSession::apply_all(std::span<const AnnotationEvent> events, bool batched,
                              unsigned threads) {
  std::uint64_t expected = next_sequence_;
  for (const auto& e : events) {
    check_event(e);
    if (e.sequence < expected) throw ValidationError("annotation sequence numbers must increase");
    expected = e.sequence + 1;
  }

  // Bound the number of propagation vectors held at once.
  const std::size_t n = size();
  const std::size_t chunk_points =
      std::max<std::size_t>(64, std::max(cache_capacity_, kDefaultCacheBytes / (n * sizeof(double) + 1)));

  // Solve every missing seed first so a solver failure leaves state untouched
  // when the whole batch fits in one chunk; larger batches are staged by chunk.
  std::size_t begin = 0;
  Matrix scores_backup;
  Vector received_backup, squared_backup, bias_backup;
  const std::size_t log_size = log_.size();
  const std::uint64_t seq_backup = next_sequence_;
  bool staged = false;

  try {
    while (begin < events.size()) {
      std::vector<Index> missing;
      std::unordered_map<Index, std::shared_ptr<const Vector>> local;
      std::size_t end = begin;
      for (; end < events.size(); ++end) {
        const Index p = events[end].point;
        if (local.count(p) || cache_.count(p)) continue;
        if (missing.size() == chunk_points) break;
        local.emplace(p, nullptr);
        missing.push_back(p);
      }
      std::vector<std::shared_ptr<const Vector>> solved(missing.size());
      parallel_for(missing.size(), [&](std::size_t t) { solved[t] = compute(missing[t]); }, threads);
      solves_ += missing.size();
      for (std::size_t t = 0; t < missing.size(); ++t) local[missing[t]] = solved[t];

      if (!staged && end < events.size()) {
        scores_backup = scores_;
        received_backup = received_;
        squared_backup = squared_;
        bias_backup = bias_;
        staged = true;
      }

      auto vector_for = [&](Index p) -> std::shared_ptr<const Vector> {
        if (auto it = local.find(p); it != local.end()) return it->second;
        ++cache_hits_;
        return lookup(p);
      };

      if (batched) {
        std::map<std::pair<Index, Index>, double> counts;
        for (std::size_t t = begin; t < end; ++t) counts[{events[t].point, events[t].label}] += 1.0;
        for (const auto& [key, count] : counts) accumulate(key.first, key.second, count, *vector_for(key.first));
      } else {
        for (std::size_t t = begin; t < end; ++t)
          accumulate(events[t].point, events[t].label, 1.0, *vector_for(events[t].point));
      }
      for (std::size_t t = begin; t < end; ++t) {
        log_.push_back(events[t]);
        next_sequence_ = events[t].sequence + 1;
      }
      for (auto& [p, phi] : local) remember(p, phi);
      begin = end;
    }
  } catch (...) {
    if (staged) {
      scores_ = std::move(scores_backup);
      received_ = std::move(received_backup);
      squared_ = std::move(squared_backup);
      bias_ = std::move(bias_backup);
      log_.resize(log_size);
      next_sequence_ = seq_backup;
    }
    throw;
  }
}

SoftLabelEstimate SpreadSession::estimates() const {
  const auto n = static_cast<Eigen::Index>(size());
  const auto c = static_cast<Eigen::Index>(num_classes());
  SoftLabelEstimate out;
  out.probabilities.resize(n, c);
  out.received = received_;
  const double uniform = 1.0 / static_cast<double>(c);
  const double denom_floor = static_cast<double>(c) * kEstimateFloor;
  for (Eigen::Index q = 0; q < n; ++q) {
    const double mass = received_(q);
    if (mass > 0.0) {
      out.probabilities.row(q) =
          (scores_.row(q).array() + kEstimateFloor) / (mass + denom_floor);
    } else {
      out.probabilities.row(q).setConstant(uniform);
    }
  }
  return out;
}

std::vector<AnnotationEvent> draw_events(FeedbackOracle& oracle, Index m, std::uint64_t rng_seed,
                                         std::uint64_t first_sequence) {
  Rng points(rng_seed, /*stream=*/0);
  std::vector<AnnotationEvent> events;
  events.reserve(m);
  const Index n = oracle.size();
  for (Index s = 0; s < m; ++s) {
    const auto q = static_cast<Index>(points.below(n));
    events.push_back({q, oracle.sample(q), first_sequence + s, AnnotationSource::Simulated});
  }
  return events;
}

std::vector<BudgetCheckpoint> run_budget(SpreadSession& session, FeedbackOracle& oracle, Index m,
                                         std::uint64_t rng_seed,
                                         std::span<const Index> checkpoints) {
  if (m < 1) throw ValidationError("budget must be at least one annotation");
  if (oracle.size() != session.size()) throw ValidationError("oracle and session sizes differ");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      (!checkpoints.empty() && checkpoints.back() > m))
    throw ValidationError("checkpoints must be sorted ascending and not exceed the budget");

  const auto events = draw_events(oracle, m, rng_seed, session.next_sequence());
  std::vector<BudgetCheckpoint> trajectory;
  trajectory.reserve(checkpoints.size());
  Index applied = 0;
  for (const Index target : checkpoints) {
    if (target > applied) {
      session.apply_all(std::span(events).subspan(applied, target - applied));
      applied = target;
    }
    trajectory.push_back({target, session.estimates()});
  }
  if (applied < m) session.apply_all(std::span(events).subspan(applied));
  return trajectory;
}

}  // namespace pls
