#include "pls/error.hpp"
#include "pls/theory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using pls::ScheduleVariant;

TEST(Schedule, WorkedExample) {
  const auto s = pls::rate_schedule(1024, 1, 0.1, 1.0, 1.0);
  EXPECT_EQ(s.alpha, 0.96875);
  EXPECT_EQ(s.path_length, 73u);
  EXPECT_LT(std::pow(0.96875, 73), 0.1);
  EXPECT_GE(std::pow(0.96875, 72), 0.1);
  EXPECT_NEAR(s.bandwidth, 0.1 / 73, 1e-15);
  EXPECT_NEAR(s.bandwidth, 0.00137, 5e-6);
  EXPECT_EQ(s.budget, static_cast<pls::Index>(std::ceil(std::pow(1024.0, 0.75) * std::log(1024.0))));
  EXPECT_EQ(s.budget, 1255u);
}

TEST(Schedule, TheoremStatementVariant) {
  const auto s = pls::rate_schedule(1024, 1, 0.1, 2.0, 1.0, ScheduleVariant::TheoremStatement);
  const double target = 0.1 / (12.0 * std::sqrt(2.0));
  EXPECT_LT(std::pow(s.alpha, static_cast<double>(s.path_length)), target);
  EXPECT_GE(std::pow(s.alpha, static_cast<double>(s.path_length - 1)), target);
  EXPECT_NEAR(s.bandwidth, 0.1 / (3.0 * 2.0 * static_cast<double>(s.path_length)), 1e-15);
}

TEST(Schedule, PathLengthBoundHoldsEverywhere) {
  for (double eps : {0.05, 0.1, 0.2}) {
    for (pls::Index n = 2; n <= 1000000; ++n) {
      const auto s = pls::rate_schedule(n, 1, eps, 1.0, 1.0);
      ASSERT_LT(std::pow(s.alpha, static_cast<double>(s.path_length)), eps) << n;
      if (n % 9973 == 0) ASSERT_GT(s.alpha, 0.0);
    }
  }
}

TEST(Schedule, Monotonicity) {
  pls::RateSchedule prev = pls::rate_schedule(2, 2, 0.1, 1.0, 1.0);
  for (pls::Index n = 3; n <= 20000; n += 7) {
    const auto s = pls::rate_schedule(n, 2, 0.1, 1.0, 1.0);
    EXPECT_GT(s.alpha, prev.alpha);
    EXPECT_GE(s.path_length, prev.path_length);
    EXPECT_LE(s.bandwidth, prev.bandwidth);
    EXPECT_GE(s.budget, prev.budget);
    prev = s;
  }
}

TEST(Schedule, Validation) {
  EXPECT_THROW(pls::rate_schedule(1, 1, 0.1, 1, 1), pls::ValidationError);
  EXPECT_THROW(pls::rate_schedule(10, 1, 1.5, 1, 1), pls::ValidationError);
  EXPECT_THROW(pls::rate_schedule(10, 1, 0.1, 0, 1), pls::ValidationError);
  EXPECT_THROW(pls::parse_schedule_variant("nope"), pls::ValidationError);
  EXPECT_EQ(pls::parse_schedule_variant("theorem_statement"), ScheduleVariant::TheoremStatement);
}

TEST(Consistency, SmallRunIsReproducible) {
  pls::ConsistencyConfig c;
  c.ns = {200, 400};
  c.repetitions = 2;
  c.seed = 5;
  const auto a = pls::consistency_experiment(c);
  const auto b = pls::consistency_experiment(c);
  ASSERT_EQ(a.runs.size(), 4u);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_TRUE(a.runs[i].ok) << a.runs[i].note;
    EXPECT_EQ(a.runs[i].max_error, b.runs[i].max_error);
    EXPECT_LE(a.runs[i].row_sum_error, 1e-5);
    EXPECT_GE(a.runs[i].max_error, a.runs[i].mean_error);
  }
  ASSERT_EQ(a.summary.size(), 2u);
  std::ostringstream out;
  pls::write_consistency_table(a, out);
  EXPECT_NE(out.str().find("max_error"), std::string::npos);
}

TEST(Consistency, WideBandwidthStillRuns) {
  pls::ConsistencyConfig c;
  c.ns = {20};
  c.repetitions = 1;
  c.eps = 0.9;
  c.lo = 0.0;
  c.hi = 0.05;  // smaller than the bandwidth: complete graph
  const auto r = pls::consistency_experiment(c);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_TRUE(r.runs[0].ok);
  EXPECT_EQ(r.runs[0].isolated, 0u);
}
