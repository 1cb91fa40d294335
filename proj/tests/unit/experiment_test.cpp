#include "pls/error.hpp"
#include "pls/experiment.hpp"
#include "pls/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>

TEST(Budget, Resolution) {
  EXPECT_EQ(pls::resolve_budget("0.10", 1000), 100u);
  EXPECT_EQ(pls::resolve_budget("10%", 1000), 100u);
  EXPECT_EQ(pls::resolve_budget("1000%", 1000), 10000u);
  EXPECT_EQ(pls::resolve_budget("250", 1000), 250u);
  EXPECT_EQ(pls::resolve_budget("1%", 50), 1u);  // 0.5 rounds to nearest
  EXPECT_THROW(pls::resolve_budget("0", 1000), pls::ValidationError);
  EXPECT_THROW(pls::resolve_budget("x", 1000), pls::Error);
  EXPECT_THROW(pls::resolve_budget("0.0001", 10), pls::ValidationError);
}

TEST(Experiment, SameSeedSameRecordsAcrossRuns) {
  const auto data = pls::make_two_moons(300, 0.1, pls::kDefaultMoonSharpness, 1);
  pls::ExperimentConfig c;
  c.budgets = {3, 30};
  c.repetitions = 2;
  c.seed = 4;
  const auto a = pls::run_experiment(data, c);
  const auto b = pls::run_experiment(data, c);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rmse, b[i].rmse);
    EXPECT_EQ(a[i].kl, b[i].kl);
  }
}

TEST(Experiment, AlphaZeroMatchesHistogramEstimator) {
  const auto data = pls::make_two_moons(300, 0.1, pls::kDefaultMoonSharpness, 2);
  pls::ExperimentConfig c;
  c.budgets = {30, 300};
  c.seed = 9;
  c.solver.alpha = 0.0;
  const auto pls_records = pls::run_experiment(data, c);
  c.estimator = pls::Estimator::Histogram;
  const auto hist = pls::run_experiment(data, c);
  ASSERT_EQ(pls_records.size(), hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i)
    EXPECT_NEAR(pls_records[i].rmse, hist[i].rmse, 1e-3);
}

TEST(Experiment, EventLogSharedAcrossEstimators) {
  const auto data = pls::make_two_moons(100, 0.1, pls::kDefaultMoonSharpness, 3);
  pls::ExperimentConfig c;
  c.budgets = {50};
  c.seed = 1;
  const auto a = pls::repetition_events(data, c, 0);
  c.estimator = pls::Estimator::Gkr;
  const auto b = pls::repetition_events(data, c, 0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 50u);
  EXPECT_NE(a, pls::repetition_events(data, c, 1));
}

TEST(Experiment, KnnWithTooFewPointsGivesNaN) {
  const auto data = pls::make_two_moons(100, 0.1, pls::kDefaultMoonSharpness, 3);
  pls::ExperimentConfig c;
  c.budgets = {1, 60};
  c.estimator = pls::Estimator::Knn;
  c.knn_k = 5;
  const auto r = pls::run_experiment(data, c);
  EXPECT_TRUE(std::isnan(r[0].rmse));
  EXPECT_FALSE(std::isnan(r[1].rmse));
}

TEST(Experiment, EstimatorNames) {
  EXPECT_EQ(pls::parse_estimator("gkr"), pls::Estimator::Gkr);
  EXPECT_EQ(pls::to_string(pls::Estimator::Knn), "knn");
  EXPECT_THROW(pls::parse_estimator("svm"), pls::ValidationError);
}
