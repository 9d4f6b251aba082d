#include "rootprobe/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "rootprobe/errors.hpp"

namespace rootprobe::stats {
namespace {

std::vector<double> load_fixture() {
  std::ifstream in(std::string(ROOTPROBE_TEST_DATA) + "/fixture_run.txt");
  std::vector<double> xs;
  for (double x; in >> x;) xs.push_back(x);
  return xs;
}

TEST(Summarize, TextbookCase) {
  std::vector<double> xs = {1, 2, 3};
  auto s = summarize(xs);
  EXPECT_EQ(s.n, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
  EXPECT_DOUBLE_EQ(*s.median, 2.0);
  EXPECT_DOUBLE_EQ(*s.min, 1.0);
  EXPECT_DOUBLE_EQ(*s.max, 3.0);
}

TEST(Summarize, Singleton) {
  std::vector<double> xs = {5.9};
  auto s = summarize(xs);
  EXPECT_DOUBLE_EQ(s.mean, 5.9);
  EXPECT_EQ(s.stddev, 0.0);
  EXPECT_EQ(*s.min, 5.9);
  EXPECT_EQ(*s.max, 5.9);
  EXPECT_EQ(*s.median, 5.9);
}

TEST(Summarize, EmptyThrows) {
  EXPECT_THROW(summarize(std::vector<double>{}), EmptyInput);
}

TEST(Summarize, RecordedFixtureMatchesNumpy) {
  // numpy 1.x: mean, std(ddof=1), median, percentile(95) on tests/data/fixture_run.txt.
  auto xs = load_fixture();
  ASSERT_EQ(xs.size(), 100u);
  auto s = summarize(xs);
  EXPECT_TRUE(oracle::close_rel(s.mean, 5.7096714899999998, 1e-9));
  EXPECT_TRUE(oracle::close_rel(s.stddev, 1.391712731667184, 1e-9));
  EXPECT_TRUE(oracle::close_rel(*s.min, 3.422784, 1e-9));
  EXPECT_TRUE(oracle::close_rel(*s.max, 10.075143000000001, 1e-9));
  EXPECT_TRUE(oracle::close_rel(*s.median, 5.6118784999999995, 1e-9));
  EXPECT_TRUE(oracle::close_rel(*s.p95, 8.1581630499999971, 1e-9));
}

TEST(Summarize, AgreesWithTwoPassOracle) {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> dist(1.5, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> xs(1 + rng() % 400);
    for (auto& x : xs) x = dist(rng);
    auto s = summarize(xs);
    auto o = oracle::brute_summary(xs);
    ASSERT_TRUE(oracle::close_rel(s.mean, o.mean, 1e-9));
    if (xs.size() > 1) {
      ASSERT_TRUE(oracle::close_rel(s.stddev, o.stddev, 1e-9));
    } else {
      ASSERT_EQ(s.stddev, 0.0);
    }
    ASSERT_TRUE(oracle::close_rel(*s.median, o.median, 1e-9));
    ASSERT_TRUE(oracle::close_rel(*s.p95, o.p95, 1e-9));
    ASSERT_LE(*s.min, *s.median);
    ASSERT_LE(*s.median, *s.max);
  }
}

TEST(Welch, IdenticalInputs) {
  auto a = SummaryStats::from_moments(100, 5.9, 1.64);
  auto r = welch_t(a, a);
  EXPECT_EQ(r.t_statistic, 0.0);
  EXPECT_EQ(r.mean_ratio, 1.0);
  EXPECT_EQ(r.z_distance_a, 0.0);
}

TEST(Welch, TableRowsS5RootedVersusStock) {
  // scipy.stats.ttest_ind_from_stats(equal_var=False) and the Welch-Satterthwaite formula.
  auto a = SummaryStats::from_moments(100, 16.13, 43.61);
  auto b = SummaryStats::from_moments(100, 5.90, 1.64);
  auto r = welch_t(a, b);
  EXPECT_TRUE(oracle::close_rel(r.t_statistic, 2.344135279149941, 1e-9)) << r.t_statistic;
  EXPECT_TRUE(oracle::close_rel(r.degrees_of_freedom, 99.280014063764085, 1e-9))
      << r.degrees_of_freedom;
  EXPECT_TRUE(oracle::close_rel(r.mean_ratio, 16.13 / 5.90, 1e-12));
}

TEST(Welch, DegenerateVarianceOnOneSide) {
  auto a = SummaryStats::from_moments(10, 12.0, 3.0);
  auto b = SummaryStats::from_moments(2, 5.0, 0.0);
  auto r = welch_t(a, b);
  EXPECT_TRUE(std::isfinite(r.t_statistic));
  EXPECT_DOUBLE_EQ(r.t_statistic, 7.0 / std::sqrt(9.0 / 10.0));
  EXPECT_TRUE(std::isinf(r.z_distance_b));
  EXPECT_GT(r.degrees_of_freedom, 0.0);
}

TEST(Welch, BothVariancesZero) {
  auto a = SummaryStats::from_moments(3, 2.0, 0.0);
  auto b = SummaryStats::from_moments(3, 1.0, 0.0);
  auto r = welch_t(a, b);
  EXPECT_TRUE(std::isinf(r.t_statistic));
  EXPECT_GT(r.t_statistic, 0.0);
  EXPECT_EQ(welch_t(a, a).t_statistic, 0.0);
}

TEST(Welch, InsufficientSamples) {
  auto a = SummaryStats::from_moments(1, 2.0, 0.0);
  auto b = SummaryStats::from_moments(5, 1.0, 1.0);
  EXPECT_THROW(welch_t(a, b), InsufficientSamples);
  EXPECT_THROW(welch_t(b, a), InsufficientSamples);
}

TEST(Welch, MeanRatioGuards) {
  EXPECT_EQ(mean_ratio(0.0, 0.0), 1.0);
  EXPECT_TRUE(std::isinf(mean_ratio(0.0, 3.0)));
  EXPECT_DOUBLE_EQ(mean_ratio(2.0, 6.0), 3.0);
}

TEST(Welch, AntisymmetryAndOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mean(0.5, 500.0), sd(0.0, 200.0);
  for (int i = 0; i < 1000; ++i) {
    auto a = SummaryStats::from_moments(2 + rng() % 300, mean(rng), sd(rng) + 1e-3);
    auto b = SummaryStats::from_moments(2 + rng() % 300, mean(rng), sd(rng) + 1e-3);
    auto ab = welch_t(a, b);
    auto ba = welch_t(b, a);
    ASSERT_EQ(ab.t_statistic, -ba.t_statistic);
    ASSERT_EQ(ab.degrees_of_freedom, ba.degrees_of_freedom);
    ASSERT_EQ(ab.mean_ratio, ba.mean_ratio);
    auto o = oracle::brute_welch(a.n, a.mean, a.stddev, b.n, b.mean, b.stddev);
    ASSERT_TRUE(oracle::close_rel(ab.t_statistic, o.t, 1e-9));
    ASSERT_TRUE(oracle::close_rel(ab.degrees_of_freedom, o.df, 1e-9));
  }
}

TEST(ScaleEquivariance, SummaryAndComparison) {
  std::mt19937_64 rng(9);
  std::lognormal_distribution<double> dist(2.0, 0.8);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> xs(20 + rng() % 100), ys(20 + rng() % 100);
    for (auto& x : xs) x = dist(rng);
    for (auto& y : ys) y = dist(rng) * 1.7;
    double c = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    auto scaled = [c](std::vector<double> v) {
      for (auto& x : v) x *= c;
      return v;
    };
    auto sx = summarize(xs), sy = summarize(ys);
    auto cx = summarize(scaled(xs)), cy = summarize(scaled(ys));
    ASSERT_TRUE(oracle::close_rel(cx.mean, c * sx.mean, 1e-9));
    ASSERT_TRUE(oracle::close_rel(cx.stddev, c * sx.stddev, 1e-9));
    ASSERT_TRUE(oracle::close_rel(*cx.min, c * *sx.min, 1e-9));
    ASSERT_TRUE(oracle::close_rel(*cx.max, c * *sx.max, 1e-9));
    ASSERT_TRUE(oracle::close_rel(*cx.median, c * *sx.median, 1e-9));
    ASSERT_TRUE(oracle::close_rel(*cx.p95, c * *sx.p95, 1e-9));
    auto r = welch_t(sx, sy), rc = welch_t(cx, cy);
    ASSERT_TRUE(oracle::close_rel(r.t_statistic, rc.t_statistic, 1e-9));
    ASSERT_TRUE(oracle::close_rel(r.degrees_of_freedom, rc.degrees_of_freedom, 1e-9));
    ASSERT_TRUE(oracle::close_rel(r.mean_ratio, rc.mean_ratio, 1e-9));
    ASSERT_TRUE(oracle::close_rel(r.z_distance_a, rc.z_distance_a, 1e-9));
    ASSERT_TRUE(oracle::close_rel(r.z_distance_b, rc.z_distance_b, 1e-9));
  }
}

TEST(Pool, EqualsConcatenation) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> dist(10.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::vector<double>> runs(1 + rng() % 5);
    std::vector<double> all;
    std::vector<SummaryStats> summaries;
    for (auto& r : runs) {
      r.resize(1 + rng() % 50);
      for (auto& x : r) x = dist(rng);
      all.insert(all.end(), r.begin(), r.end());
      summaries.push_back(summarize(r));
    }
    auto pooled = pool(summaries);
    auto direct = summarize(all);
    ASSERT_EQ(pooled.n, direct.n);
    ASSERT_TRUE(oracle::close_rel(pooled.mean, direct.mean, 1e-9));
    ASSERT_TRUE(oracle::close_rel(pooled.stddev, direct.stddev, 1e-9));
    ASSERT_EQ(*pooled.min, *direct.min);
    ASSERT_EQ(*pooled.max, *direct.max);
    if (runs.size() > 1) ASSERT_FALSE(pooled.median.has_value());
  }
}

TEST(Pool, MomentsOnlyRunsHaveNoExtrema) {
  std::vector<SummaryStats> runs = {SummaryStats::from_moments(100, 5.90, 1.64),
                                    SummaryStats::from_moments(100, 6.15, 2.11)};
  auto p = pool(runs);
  EXPECT_EQ(p.n, 200u);
  EXPECT_DOUBLE_EQ(p.mean, (5.90 + 6.15) / 2);
  EXPECT_FALSE(p.min.has_value());
}

}  // namespace
}  // namespace rootprobe::stats
