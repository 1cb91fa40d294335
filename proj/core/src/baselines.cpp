#include "pls/baselines.hpp"

#include "pls/error.hpp"
#include "pls/graph.hpp"
#include "pls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pls {

namespace {

// Event counts per annotated point, in ascending point order.
struct AnnotatedPoint {
  Index point;
  Eigen::RowVectorXd counts;
};

std::vector<AnnotatedPoint> group_events(const AnnotationLog& log) {
  std::map<Index, Eigen::RowVectorXd> grouped;
  for (const auto& e : log.events) {
    auto [it, inserted] = grouped.try_emplace(e.point);
    if (inserted) it->second = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(log.num_classes));
    it->second(static_cast<Eigen::Index>(e.label)) += 1.0;
  }
  std::vector<AnnotatedPoint> out;
  out.reserve(grouped.size());
  for (auto& [p, counts] : grouped) out.push_back({p, std::move(counts)});
  return out;
}

std::span<const double> row_span(const EmbeddedDataset& data, Index i) {
  return {data.features().row(static_cast<Eigen::Index>(i)).data(), data.dim()};
}

void check_log(const EmbeddedDataset& dataset, const AnnotationLog& log) {
  if (log.n != dataset.size()) throw ValidationError("annotation log size does not match dataset");
  if (log.num_classes < 2) throw ValidationError("annotation log needs at least two classes");
  log.validate();
}

}  // namespace

SoftLabelEstimate gkr_estimate(const EmbeddedDataset& dataset, const AnnotationLog& log,
                               double gamma, std::vector<Index>* underflow_rows) {
  check_log(dataset, log);
  if (log.events.empty()) throw ValidationError("kernel regression needs at least one event");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");

  const auto annotated = group_events(log);
  const Index n = dataset.size();
  const auto c = static_cast<Eigen::Index>(log.num_classes);
  SoftLabelEstimate out = uniform_estimate(n, log.num_classes);
  std::vector<char> underflow(n, 0);

  parallel_for(n, [&](std::size_t q) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(c);
    for (const auto& a : annotated) {
      const double w = std::exp(-gamma * squared_distance(row_span(dataset, q), row_span(dataset, a.point)));
      acc += w * a.counts;
    }
    const double denom = acc.sum();
    const auto eq = static_cast<Eigen::Index>(q);
    out.received(eq) = denom;
    if (denom > 0.0)
      out.probabilities.row(eq) = acc / denom;
    else
      underflow[q] = 1;
  });

  if (underflow_rows) {
    underflow_rows->clear();
    for (Index q = 0; q < n; ++q)
      if (underflow[q]) underflow_rows->push_back(q);
  }
  return out;
}

SoftLabelEstimate knn_estimate(const EmbeddedDataset& dataset, const AnnotationLog& log, Index k) {
  check_log(dataset, log);
  if (k < 1) throw ValidationError("k must be positive");
  const auto annotated = group_events(log);
  if (annotated.size() < k)
    throw ValidationError("only " + std::to_string(annotated.size()) +
                          " annotated points, fewer than k=" + std::to_string(k));

  const Index n = dataset.size();
  const auto c = static_cast<Eigen::Index>(log.num_classes);
  SoftLabelEstimate out = uniform_estimate(n, log.num_classes);

  parallel_for(n, [&](std::size_t q) {
    // (distance, annotated point index) keeps ties ordered by point index
    // because `annotated` is sorted by point.
    std::vector<std::pair<double, std::size_t>> dist(annotated.size());
    for (std::size_t a = 0; a < annotated.size(); ++a)
      dist[a] = {squared_distance(row_span(dataset, q), row_span(dataset, annotated[a].point)), a};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(c);
    for (Index t = 0; t < k; ++t) acc += annotated[dist[t].second].counts;
    const double total = acc.sum();
    const auto eq = static_cast<Eigen::Index>(q);
    out.received(eq) = total;
    out.probabilities.row(eq) = acc / total;
  });
  return out;
}

SoftLabelEstimate histogram_estimate(const AnnotationLog& log) {
  if (log.num_classes < 2) throw ValidationError("annotation log needs at least two classes");
  log.validate();
  SoftLabelEstimate out = uniform_estimate(log.n, log.num_classes);
  Matrix counts = Matrix::Zero(static_cast<Eigen::Index>(log.n),
                               static_cast<Eigen::Index>(log.num_classes));
  for (const auto& e : log.events)
    counts(static_cast<Eigen::Index>(e.point), static_cast<Eigen::Index>(e.label)) += 1.0;
  for (Eigen::Index q = 0; q < counts.rows(); ++q) {
    const double total = counts.row(q).sum();
    out.received(q) = total;
    if (total > 0.0) out.probabilities.row(q) = counts.row(q) / total;
  }
  return out;
}

}  // namespace pls
