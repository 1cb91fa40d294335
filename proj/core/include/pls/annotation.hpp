#pragma once

#include "pls/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace pls {

enum class AnnotationSource { Simulated, Human };

std::string_view to_string(AnnotationSource source);
AnnotationSource parse_source(std::string_view text);

/// One annotator feedback: class `label` observed at point `point`.
struct AnnotationEvent {
  Index point = 0;
  Index label = 0;
  std::uint64_t sequence = 0;
  AnnotationSource source = AnnotationSource::Simulated;

  friend bool operator==(const AnnotationEvent&, const AnnotationEvent&) = default;
};

/// Event sequence over a dataset of n points and C classes.
struct AnnotationLog {
  Index n = 0;
  Index num_classes = 0;
  std::vector<AnnotationEvent> events;

  /// Throws ValidationError on out-of-range indices.
  void validate() const;
  /// Number of distinct annotated points.
  Index distinct_points() const;
};

/// n x C row-stochastic estimate plus the evidence mass each row received.
struct SoftLabelEstimate {
  Matrix probabilities;
  Vector received;

  Index size() const noexcept { return static_cast<Index>(probabilities.rows()); }
  Index num_classes() const noexcept { return static_cast<Index>(probabilities.cols()); }
};

/// Uniform rows, zero received mass.
SoftLabelEstimate uniform_estimate(Index n, Index num_classes);

class EmbeddedDataset;

/// Event log text format: "sequence,point_id,class,source".
void write_event_log(std::span<const AnnotationEvent> events, const EmbeddedDataset& dataset,
                     std::ostream& out);
std::vector<AnnotationEvent> read_event_log(std::istream& in, const EmbeddedDataset& dataset);

/// Estimate export: "id,p0..p{C-1},received_mass".
void write_estimates(const SoftLabelEstimate& estimate, const EmbeddedDataset& dataset,
                     std::ostream& out);

}  // namespace pls
