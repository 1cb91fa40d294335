#include "pls/simulation.hpp"

#include "csv.hpp"
#include "pls/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace pls {

namespace {

// Distance from (x, y) to the unit half circle centred at (cx, cy); `upper`
// selects the half with y >= cy.
double arc_distance(double x, double y, double cx, double cy, bool upper) {
  const double vx = x - cx;
  const double vy = y - cy;
  const bool inside = upper ? vy >= 0.0 : vy <= 0.0;
  if (inside) return std::abs(std::hypot(vx, vy) - 1.0);
  const double to_right = std::hypot(vx - 1.0, vy);
  const double to_left = std::hypot(vx + 1.0, vy);
  return std::min(to_right, to_left);
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double two_moons_margin(double x, double y) {
  return arc_distance(x, y, 0.0, 0.0, true) - arc_distance(x, y, 1.0, 0.5, false);
}

EmbeddedDataset make_two_moons(Index n, double noise, double sharpness, std::uint64_t rng_seed) {
  if (n < 2) throw ValidationError("two moons needs at least two points");
  if (!(noise >= 0.0)) throw ValidationError("noise must be nonnegative");
  if (!(sharpness > 0.0)) throw ValidationError("sharpness must be positive");

  Rng rng(rng_seed);
  const Index n_upper = n / 2;
  const Index n_lower = n - n_upper;
  auto angle = [](Index i, Index count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };

  Matrix x(static_cast<Eigen::Index>(n), 2);
  for (Index i = 0; i < n_upper; ++i) {
    const double t = angle(i, n_upper);
    x(static_cast<Eigen::Index>(i), 0) = std::cos(t);
    x(static_cast<Eigen::Index>(i), 1) = std::sin(t);
  }
  for (Index i = 0; i < n_lower; ++i) {
    const double t = angle(i, n_lower);
    x(static_cast<Eigen::Index>(n_upper + i), 0) = 1.0 - std::cos(t);
    x(static_cast<Eigen::Index>(n_upper + i), 1) = 0.5 - std::sin(t);
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) += noise * rng.normal();
    x(i, 1) += noise * rng.normal();
  }
  // Fisher-Yates shuffle of rows.
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(i + 1));
    x.row(static_cast<Eigen::Index>(i)).swap(x.row(j));
  }

  Matrix truth(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p1 = logistic(sharpness * two_moons_margin(x(i, 0), x(i, 1)));
    truth(i, 0) = 1.0 - p1;
    truth(i, 1) = p1;
  }
  return EmbeddedDataset(sequential_ids(n), std::move(x), std::move(truth));
}

EmbeddedDataset make_sine_1d(Index n, double lo, double hi, std::uint64_t rng_seed) {
  if (n < 1) throw ValidationError("sine dataset needs at least one point");
  if (!(lo < hi)) throw ValidationError("sine dataset requires lo < hi");
  Rng rng(rng_seed);
  Matrix x(static_cast<Eigen::Index>(n), 1);
  Matrix truth(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double v = lo + (hi - lo) * rng.uniform();
    x(i, 0) = v;
    const double s = std::sin(v);
    truth(i, 0) = 0.5 * (s + 1.0);
    truth(i, 1) = 0.5 * (1.0 - s);
  }
  return EmbeddedDataset(sequential_ids(n), std::move(x), std::move(truth));
}

FeedbackOracle::FeedbackOracle(std::shared_ptr<const Matrix> truth, std::uint64_t rng_seed)
    : truth_(std::move(truth)), rng_(rng_seed, /*stream=*/1) {
  if (!truth_ || truth_->rows() == 0 || truth_->cols() < 2)
    throw ValidationError("feedback oracle needs a truth matrix with at least two classes");
  for (Eigen::Index i = 0; i < truth_->rows(); ++i) {
    const double sum = truth_->row(i).sum();
    if ((truth_->row(i).array() < 0.0).any() || std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("truth rows must be probability vectors", static_cast<Index>(i));
  }
}

FeedbackOracle::FeedbackOracle(const EmbeddedDataset& dataset, std::uint64_t rng_seed)
    : FeedbackOracle(dataset.has_truth() ? std::make_shared<const Matrix>(dataset.truth())
                                         : nullptr,
                     rng_seed) {}

Index FeedbackOracle::sample(Index q) {
  if (q >= size()) throw ValidationError("oracle query out of range");
  const double u = rng_.uniform();
  const auto row = truth_->row(static_cast<Eigen::Index>(q));
  double cumulative = 0.0;
  Index last_positive = 0;
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    if (row(c) <= 0.0) continue;
    last_positive = static_cast<Index>(c);
    cumulative += row(c);
    if (u < cumulative) return static_cast<Index>(c);
  }
  return last_positive;  // u landed in the rounding gap above the total
}

double rmse(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw ValidationError("rmse: shape mismatch");
  if (estimate.size() == 0) return 0.0;
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(estimate.size()));
}

double kl_divergence(const Matrix& estimate, const Matrix& truth, double floor) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw ValidationError("kl_divergence: shape mismatch");
  if (!(floor > 0.0)) throw ValidationError("kl_divergence: floor must be positive");
  if (estimate.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index q = 0; q < truth.rows(); ++q) {
    const Eigen::RowVectorXd p = truth.row(q).cwiseMax(floor);
    const Eigen::RowVectorXd r = estimate.row(q).cwiseMax(floor);
    const double psum = p.sum();
    const double rsum = r.sum();
    double row_kl = 0.0;
    for (Eigen::Index c = 0; c < p.size(); ++c) {
      if (truth(q, c) == 0.0) continue;
      const double pc = p(c) / psum;
      row_kl += pc * std::log(pc / (r(c) / rsum));
    }
    total += row_kl;
  }
  return total / static_cast<double>(truth.rows());
}

void write_experiment_records(std::span<const ExperimentRecord> records, std::ostream& out) {
  out << "# rng: " << Rng::kAlgorithm << '\n';
  out << "budget,repetition,rmse,kl,wall_ms\n";
  for (const auto& r : records) {
    out << r.budget << ',' << r.repetition << ',' << detail::format_double(r.rmse) << ','
        << detail::format_double(r.kl) << ',' << detail::format_double(r.wall_ms) << '\n';
  }
}

}  // namespace pls
