#include "pls/uncertainty.hpp"

#include "csv.hpp"
#include "pls/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace pls {

std::string_view to_string(IntervalMethod method) {
  return method == IntervalMethod::Wilson ? "wilson" : "hoeffding";
}

IntervalMethod parse_interval_method(std::string_view text) {
  if (text == "wilson") return IntervalMethod::Wilson;
  if (text == "hoeffding") return IntervalMethod::Hoeffding;
  throw ValidationError("unknown interval method '" + std::string(text) + "'");
}

ConfidenceInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (!(z > 0.0)) throw ValidationError("critical value z must be positive");
  ConfidenceInterval ci;
  ci.method = IntervalMethod::Wilson;
  ci.level = std::erf(z / std::numbers::sqrt2);
  if (trials == 0) {
    ci.informative = false;
    return ci;
  }
  const auto n = static_cast<double>(trials);
  const auto k = static_cast<double>(std::min(successes, trials));
  const double z2 = z * z;
  const double center = (k + z2 / 2.0) / (n + z2);
  const double half = z * std::sqrt(k * (n - k) / n + z2 / 4.0) / (n + z2);
  ci.lower = std::clamp(center - half, 0.0, 1.0);
  ci.upper = std::clamp(center + half, 0.0, 1.0);
  return ci;
}

ConfidenceInterval wilson_ci(const SpreadSession& session, Index q, Index c, double z) {
  if (q >= session.size() || c >= session.num_classes())
    throw ValidationError("interval index out of range");
  const double score = session.scores()(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c));
  const double mass = session.received()(static_cast<Eigen::Index>(q));
  const auto k = static_cast<std::uint64_t>(std::floor(std::max(0.0, score)));
  const auto n = static_cast<std::uint64_t>(std::floor(std::max(0.0, mass)));
  return wilson_interval(k, n, z);
}

double hoeffding_radius(double squared_sum, double mass, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (!(mass > 0.0)) throw ValidationError("Hoeffding radius needs positive mass");
  return std::sqrt(squared_sum / (mass * mass) * std::log(2.0 / delta) / 2.0);
}

ConfidenceInterval hoeffding_ci(const SpreadSession& session, Index q, Index c, double delta,
                                bool union_bound) {
  if (q >= session.size() || c >= session.num_classes())
    throw ValidationError("interval index out of range");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (!session.has_lipschitz())
    throw ValidationError("Hoeffding intervals need a configured Lipschitz constant");

  ConfidenceInterval ci;
  ci.method = IntervalMethod::Hoeffding;
  ci.level = 1.0 - delta;
  const auto eq = static_cast<Eigen::Index>(q);
  const double mass = session.received()(eq);
  if (!(mass > 0.0)) {
    ci.informative = false;
    return ci;
  }
  const double class_delta =
      union_bound ? delta / static_cast<double>(session.num_classes()) : delta;
  const double radius = hoeffding_radius(session.squared()(eq), mass, class_delta);
  const double bias = session.bias()(eq) / mass;
  const double estimate = session.scores()(eq, static_cast<Eigen::Index>(c)) / mass;
  ci.lower = std::clamp(estimate - radius - bias, 0.0, 1.0);
  ci.upper = std::clamp(estimate + radius + bias, 0.0, 1.0);
  return ci;
}

std::vector<IntervalRow> ci_report(const SpreadSession& session, IntervalMethod method,
                                   double level_param, bool union_bound) {
  std::vector<IntervalRow> rows;
  rows.reserve(session.size() * session.num_classes());
  for (Index q = 0; q < session.size(); ++q) {
    for (Index c = 0; c < session.num_classes(); ++c) {
      rows.push_back({q, c,
                      method == IntervalMethod::Wilson
                          ? wilson_ci(session, q, c, level_param)
                          : hoeffding_ci(session, q, c, level_param, union_bound)});
    }
  }
  return rows;
}

void write_ci_report(std::span<const IntervalRow> rows, const EmbeddedDataset& dataset,
                     std::ostream& out) {
  out << "id,class,lower,upper,method\n";
  for (const auto& r : rows)
    out << dataset.ids().at(r.point) << ',' << r.label << ','
        << detail::format_double(r.interval.lower) << ','
        << detail::format_double(r.interval.upper) << ',' << to_string(r.interval.method) << '\n';
}

double point_coverage(std::span<const IntervalRow> rows, const Matrix& truth) {
  if (rows.empty()) return 0.0;
  std::vector<char> covered(static_cast<std::size_t>(truth.rows()), 1);
  std::vector<char> seen(static_cast<std::size_t>(truth.rows()), 0);
  for (const auto& r : rows) {
    if (static_cast<Eigen::Index>(r.point) >= truth.rows() ||
        static_cast<Eigen::Index>(r.label) >= truth.cols())
      throw ValidationError("interval row outside the truth matrix");
    seen[r.point] = 1;
    const double p = truth(static_cast<Eigen::Index>(r.point), static_cast<Eigen::Index>(r.label));
    if (!r.interval.contains(p)) covered[r.point] = 0;
  }
  std::size_t points = 0, hits = 0;
  for (std::size_t q = 0; q < seen.size(); ++q) {
    if (!seen[q]) continue;
    ++points;
    hits += covered[q];
  }
  return static_cast<double>(hits) / static_cast<double>(points);
}

}  // namespace pls
