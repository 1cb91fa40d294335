#pragma once

#include "pls/annotation.hpp"
#include "pls/dataset.hpp"

#include <vector>

namespace pls {

/// Gaussian kernel regression over the annotated events:
/// p_q = sum_j exp(-gamma ||x_q - x_j||^2) onehot(c_j) / sum_j exp(...).
/// Rows whose denominator underflows to zero fall back to uniform and are
/// listed in `underflow_rows` when provided. `received` holds the
/// denominators.
SoftLabelEstimate gkr_estimate(const EmbeddedDataset& dataset, const AnnotationLog& log,
                               double gamma, std::vector<Index>* underflow_rows = nullptr);

/// k-NN regression over distinct annotated points: sums the event histograms
/// of the k nearest annotated points (ties by index) and normalizes. Throws
/// ValidationError when fewer than k points carry annotations.
SoftLabelEstimate knn_estimate(const EmbeddedDataset& dataset, const AnnotationLog& log, Index k);

/// Per-point relative class frequencies; unannotated points are uniform.
SoftLabelEstimate histogram_estimate(const AnnotationLog& log);

}  // namespace pls
