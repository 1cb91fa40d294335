#include "pls/annotation.hpp"

#include "csv.hpp"
#include "pls/dataset.hpp"
#include "pls/error.hpp"

#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

namespace pls {

std::string_view to_string(AnnotationSource source) {
  return source == AnnotationSource::Human ? "human" : "simulated";
}

AnnotationSource parse_source(std::string_view text) {
  if (text == "human") return AnnotationSource::Human;
  if (text == "simulated") return AnnotationSource::Simulated;
  throw ParseError("unknown annotation source '" + std::string(text) + "'");
}

void AnnotationLog::validate() const {
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k].point >= n) throw ValidationError("event point index out of range", k);
    if (events[k].label >= num_classes) throw ValidationError("event class out of range", k);
  }
}

Index AnnotationLog::distinct_points() const {
  std::unordered_set<Index> seen;
  for (const auto& e : events) seen.insert(e.point);
  return seen.size();
}

SoftLabelEstimate uniform_estimate(Index n, Index num_classes) {
  SoftLabelEstimate out;
  out.probabilities = Matrix::Constant(static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(num_classes),
                                       1.0 / static_cast<double>(num_classes));
  out.received = Vector::Zero(static_cast<Eigen::Index>(n));
  return out;
}

void write_event_log(std::span<const AnnotationEvent> events, const EmbeddedDataset& dataset,
                     std::ostream& out) {
  out << "sequence,point_id,class,source\n";
  for (const auto& e : events)
    out << e.sequence << ',' << dataset.ids().at(e.point) << ',' << e.label << ','
        << to_string(e.source) << '\n';
}

std::vector<AnnotationEvent> read_event_log(std::istream& in, const EmbeddedDataset& dataset) {
  std::string line;
  std::vector<AnnotationEvent> events;
  bool header = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = detail::split_fields(trimmed);
    if (header) {
      header = false;
      if (fields.size() == 4 && fields[0] == "sequence") continue;
    }
    if (fields.size() != 4) throw ParseError("event log rows need 4 columns", row);
    AnnotationEvent e;
    const long long seq = detail::parse_integer(fields[0], row);
    const long long label = detail::parse_integer(fields[2], row);
    if (seq < 0 || label < 0) throw ParseError("negative sequence or class", row);
    e.sequence = static_cast<std::uint64_t>(seq);
    e.label = static_cast<Index>(label);
    const auto idx = dataset.find(fields[1]);
    if (!idx) throw ValidationError("unknown point id '" + std::string(fields[1]) + "'", row);
    e.point = *idx;
    e.source = parse_source(fields[3]);
    events.push_back(e);
    ++row;
  }
  return events;
}

void write_estimates(const SoftLabelEstimate& estimate, const EmbeddedDataset& dataset,
                     std::ostream& out) {
  if (estimate.size() != dataset.size())
    throw ValidationError("estimate and dataset sizes differ");
  out << "id";
  for (Index c = 0; c < estimate.num_classes(); ++c) out << ",p" << c;
  out << ",received_mass\n";
  for (Index q = 0; q < estimate.size(); ++q) {
    const auto eq = static_cast<Eigen::Index>(q);
    out << dataset.ids()[q];
    for (Index c = 0; c < estimate.num_classes(); ++c)
      out << ',' << detail::format_double(estimate.probabilities(eq, static_cast<Eigen::Index>(c)));
    out << ',' << detail::format_double(estimate.received(eq)) << '\n';
  }
}

}  // namespace pls
