#pragma once

#include "pls/dataset.hpp"
#include "pls/spreading.hpp"

#include <iosfwd>
#include <string_view>
#include <vector>

namespace pls {

enum class IntervalMethod { Wilson, Hoeffding };

std::string_view to_string(IntervalMethod method);
IntervalMethod parse_interval_method(std::string_view text);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
  IntervalMethod method = IntervalMethod::Wilson;
  /// Nominal coverage in (0, 1).
  double level = 0.95;
  /// False when no evidence is available and the interval is the trivial [0, 1].
  bool informative = true;

  double width() const noexcept { return upper - lower; }
  bool contains(double p) const noexcept { return lower <= p && p <= upper; }
};

/// Wilson score interval for `successes` out of `trials` at critical value z,
/// clipped to [0, 1]. trials == 0 yields [0, 1].
ConfidenceInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z);

/// Rounds the class score and total mass at q down to virtual counts and
/// applies the Wilson interval.
ConfidenceInterval wilson_ci(const SpreadSession& session, Index q, Index c, double z);

/// Smallest eps with 2 exp(-2 eps^2 N^2 / Q) <= delta.
double hoeffding_radius(double squared_sum, double mass, double delta);

/// Hoeffding variance radius plus the Lipschitz bias bound around the
/// unfloored estimate Y/N. `union_bound` splits delta across classes. Throws
/// if the session has no Lipschitz constant; returns a non-informative [0, 1]
/// when q received no mass.
ConfidenceInterval hoeffding_ci(const SpreadSession& session, Index q, Index c, double delta,
                                bool union_bound = false);

struct IntervalRow {
  Index point = 0;
  Index label = 0;
  ConfidenceInterval interval;
};

/// All n * C intervals. `level_param` is z for Wilson and delta for Hoeffding.
std::vector<IntervalRow> ci_report(const SpreadSession& session, IntervalMethod method,
                                   double level_param, bool union_bound = false);

/// "id,class,lower,upper,method"
void write_ci_report(std::span<const IntervalRow> rows, const EmbeddedDataset& dataset,
                     std::ostream& out);

/// Fraction of points whose intervals contain the true soft label for every class.
double point_coverage(std::span<const IntervalRow> rows, const Matrix& truth);

}  // namespace pls
