#pragma once

#include "pls/annotation.hpp"
#include "pls/dataset.hpp"
#include "pls/rng.hpp"
#include "pls/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>

namespace pls {

/// Default logistic sharpness of the two-moons soft labels.
inline constexpr double kDefaultMoonSharpness = 10.0;

/// Two interleaved half circles (scikit-learn make_moons geometry, points
/// shuffled) with isotropic Gaussian noise. Soft labels:
/// p(class 1 | x) = logistic(sharpness * (d_upper(x) - d_lower(x))), where
/// d_* is the distance to the noiseless upper/lower arc.
EmbeddedDataset make_two_moons(Index n, double noise, double sharpness, std::uint64_t rng_seed);

/// Signed margin d_upper(x) - d_lower(x) of a 2-D point.
double two_moons_margin(double x, double y);

/// Features uniform on [lo, hi]; truth (1/2 (sin x + 1), 1/2 (1 - sin x)).
EmbeddedDataset make_sine_1d(Index n, double lo, double hi, std::uint64_t rng_seed);

/// Simulated crowd: each query returns a class drawn from the truth row.
class FeedbackOracle {
public:
  FeedbackOracle(std::shared_ptr<const Matrix> truth, std::uint64_t rng_seed);
  FeedbackOracle(const EmbeddedDataset& dataset, std::uint64_t rng_seed);

  Index size() const noexcept { return static_cast<Index>(truth_->rows()); }
  Index num_classes() const noexcept { return static_cast<Index>(truth_->cols()); }
  const Matrix& truth() const noexcept { return *truth_; }

  /// Inverse-CDF draw from row q.
  Index sample(Index q);

private:
  std::shared_ptr<const Matrix> truth_;
  Rng rng_;
};

/// sqrt(mean over all n*C entries of squared differences).
double rmse(const Matrix& estimate, const Matrix& truth);

/// Mean over points of KL(truth || estimate); both rows floored at `floor`
/// and renormalized first, and entries with truth exactly 0 contribute 0.
double kl_divergence(const Matrix& estimate, const Matrix& truth, double floor = 1e-9);

/// One line of an experiment results table.
struct ExperimentRecord {
  Index budget = 0;
  Index repetition = 0;
  double rmse = 0.0;
  double kl = 0.0;
  double wall_ms = 0.0;
};

/// "budget,repetition,rmse,kl,wall_ms" preceded by a "# rng: ..." comment.
void write_experiment_records(std::span<const ExperimentRecord> records, std::ostream& out);

}  // namespace pls
