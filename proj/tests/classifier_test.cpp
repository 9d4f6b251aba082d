#include "rootprobe/classifier.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/simulator.hpp"

namespace rootprobe {
namespace {

using stats::SummaryStats;

const DeviceProfile& builtin(const std::string& key) {
  static const auto profiles = builtin_profiles();
  const auto* p = find_profile(profiles, key);
  if (p == nullptr) throw std::logic_error("missing builtin " + key);
  return *p;
}

DeviceProfile synthetic(const std::string& label, Configuration c, double mean, double sd) {
  DeviceProfile p;
  p.device_label = label;
  p.configuration = c;
  p.thermal_state = ThermalState::warm;
  p.runs = {SummaryStats::from_moments(100, mean, sd)};
  return p;
}

std::vector<std::vector<double>> simulated_runs(const DeviceProfile& profile, std::uint64_t seed) {
  auto pooled = profile.pooled();
  auto model = sim::fit_latency_model(pooled.mean, pooled.stddev);
  model.seed = seed;
  std::vector<std::vector<double>> runs(3);
  std::uint64_t index = 0;
  for (auto& run : runs)
    for (int i = 0; i < 100; ++i) run.push_back(sim::sample_delay(model, index++));
  return runs;
}

TEST(Builtin, TableValues) {
  auto profiles = builtin_profiles();
  ASSERT_EQ(profiles.size(), 3u);
  EXPECT_DOUBLE_EQ(builtin("S5-stock").runs[0].mean, 5.90);
  EXPECT_DOUBLE_EQ(builtin("S4-rooted").runs[1].stddev, 520.37);
  for (const auto& p : profiles) {
    EXPECT_EQ(p.runs.size(), 3u);
    EXPECT_EQ(p.thermal_state, ThermalState::warm);
    for (const auto& r : p.runs) EXPECT_EQ(r.n, 100u);
  }
  EXPECT_EQ(find_profile(profiles, "S4-stock"), nullptr);
  EXPECT_NE(find_profile(profiles, "S5 rooted"), nullptr);
}

TEST(Classify, ObservationAtStockMean) {
  auto stock = synthetic("X", Configuration::stock, 6.0, 1.5);
  auto rooted = synthetic("X", Configuration::rooted, 60.0, 20.0);
  std::vector<SummaryStats> obs = {SummaryStats::from_moments(100, 6.0, 1.0)};
  auto v = classify(obs, rooted, stock, {}, ThermalState::warm);
  EXPECT_LT(v.score, 0.35);
  EXPECT_EQ(v.label, VerdictLabel::stock_leaning);
  EXPECT_EQ(v.distance_to_stock, 0.0);
  EXPECT_TRUE(v.warnings.empty());
  ASSERT_TRUE(v.versus_stock.has_value());
  EXPECT_EQ(v.versus_stock->t_statistic, 0.0);
}

TEST(Classify, SimulatedS5RootedLeansRooted) {
  auto runs = simulated_runs(builtin("S5-rooted"), 77);
  auto v = classify_rtts(runs, builtin("S5-rooted"), builtin("S5-stock"), {}, ThermalState::warm);
  EXPECT_EQ(v.label, VerdictLabel::rooted_leaning) << v.score;
  EXPECT_EQ(v.observed.n, 300u);
  EXPECT_TRUE(v.observed.median.has_value());
}

TEST(Classify, SimulatedS5StockLeansStock) {
  auto runs = simulated_runs(builtin("S5-stock"), 78);
  auto v = classify_rtts(runs, builtin("S5-rooted"), builtin("S5-stock"), {}, ThermalState::warm);
  EXPECT_EQ(v.label, VerdictLabel::stock_leaning) << v.score;
}

TEST(Classify, IdenticalReferencesAreInconclusive) {
  auto a = synthetic("A", Configuration::rooted, 10.0, 2.0);
  auto b = synthetic("B", Configuration::stock, 10.0, 2.0);
  std::vector<SummaryStats> obs = {SummaryStats::from_moments(50, 3.0, 1.0)};
  auto v = classify(obs, a, b, {}, ThermalState::warm);
  EXPECT_DOUBLE_EQ(v.score, 0.5);
  EXPECT_EQ(v.label, VerdictLabel::inconclusive);
  ASSERT_FALSE(v.warnings.empty());
  EXPECT_NE(v.warnings[0].find("inseparable"), std::string::npos);
}

TEST(Classify, InseparableForcesInconclusiveRegardlessOfScore) {
  auto rooted = synthetic("A", Configuration::rooted, 12.0, 1.0);
  auto stock = synthetic("B", Configuration::stock, 10.0, 1.0);  // ratio 1.2
  std::vector<SummaryStats> obs = {SummaryStats::from_moments(50, 10.0, 1.0)};
  auto v = classify(obs, rooted, stock, {}, ThermalState::warm);
  EXPECT_EQ(v.score, 0.0);
  EXPECT_EQ(v.label, VerdictLabel::inconclusive);
}

TEST(Classify, S4AgainstItselfIsInconclusive) {
  const auto& s4 = builtin("S4-rooted");
  auto stock_copy = s4;
  stock_copy.configuration = Configuration::stock;
  auto runs = simulated_runs(s4, 5);
  auto v = classify_rtts(runs, s4, stock_copy, {}, ThermalState::warm);
  EXPECT_EQ(v.label, VerdictLabel::inconclusive);
}

TEST(Classify, ThermalMismatchWarnsWithoutChangingLabel) {
  auto runs = simulated_runs(builtin("S5-stock"), 3);
  auto warm = classify_rtts(runs, builtin("S5-rooted"), builtin("S5-stock"), {}, ThermalState::warm);
  auto cold = classify_rtts(runs, builtin("S5-rooted"), builtin("S5-stock"), {}, ThermalState::cold);
  EXPECT_EQ(warm.label, cold.label);
  EXPECT_EQ(warm.score, cold.score);
  EXPECT_TRUE(warm.warnings.empty());
  ASSERT_EQ(cold.warnings.size(), 2u);
  EXPECT_NE(cold.warnings[0].find("thermal"), std::string::npos);
}

TEST(Classify, EmptyObservation) {
  std::vector<SummaryStats> none;
  EXPECT_THROW(classify(none, builtin("S5-rooted"), builtin("S5-stock")), EmptyInput);
  std::vector<std::vector<double>> empty_runs(3);
  EXPECT_THROW(classify_rtts(empty_runs, builtin("S5-rooted"), builtin("S5-stock")), EmptyInput);
}

TEST(Classify, SingleSampleOmitsWelch) {
  std::vector<SummaryStats> obs = {SummaryStats::from_moments(1, 6.0, 0.0)};
  auto v = classify(obs, builtin("S5-rooted"), builtin("S5-stock"), {}, ThermalState::warm);
  EXPECT_FALSE(v.versus_rooted.has_value());
  EXPECT_EQ(v.label, VerdictLabel::stock_leaning);
}

TEST(Classify, RawAndSummaryPathsAgree) {
  auto runs = simulated_runs(builtin("S5-rooted"), 91);
  std::vector<SummaryStats> summaries;
  for (const auto& r : runs) summaries.push_back(stats::summarize(r));
  auto raw = classify_rtts(runs, builtin("S5-rooted"), builtin("S5-stock"));
  auto sum = classify(summaries, builtin("S5-rooted"), builtin("S5-stock"));
  EXPECT_TRUE(oracle::close_rel(raw.score, sum.score, 1e-12));
  EXPECT_EQ(raw.label, sum.label);
}

TEST(Properties, SwapSymmetryAndScaleInvariance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> mean(1.0, 400.0), sd(0.1, 100.0), scale(0.01, 50.0);
  for (int i = 0; i < 500; ++i) {
    auto rooted = synthetic("R", Configuration::rooted, mean(rng), sd(rng));
    auto stock = synthetic("S", Configuration::stock, mean(rng), sd(rng));
    std::vector<SummaryStats> obs = {SummaryStats::from_moments(100, mean(rng), sd(rng))};

    auto v = classify(obs, rooted, stock);
    auto swapped = classify(obs, stock, rooted);
    ASSERT_NEAR(swapped.score, 1.0 - v.score, 1e-12);
    if (v.label == VerdictLabel::rooted_leaning) ASSERT_EQ(swapped.label, VerdictLabel::stock_leaning);
    if (v.label == VerdictLabel::stock_leaning) ASSERT_EQ(swapped.label, VerdictLabel::rooted_leaning);
    if (v.label == VerdictLabel::inconclusive &&
        std::fabs(v.score - 0.5) < 0.15 - 1e-9)
      ASSERT_EQ(swapped.label, VerdictLabel::inconclusive);

    double c = scale(rng);
    auto scaled = [c](DeviceProfile p) {
      for (auto& r : p.runs) {
        r.mean *= c;
        r.stddev *= c;
      }
      return p;
    };
    std::vector<SummaryStats> obs_c = {
        SummaryStats::from_moments(100, obs[0].mean * c, obs[0].stddev * c)};
    auto vc = classify(obs_c, scaled(rooted), scaled(stock));
    ASSERT_NEAR(vc.score, v.score, 1e-9);
    if (std::fabs(v.score - 0.65) > 1e-6 && std::fabs(v.score - 0.35) > 1e-6 &&
        std::fabs(v.reference_separation - 1.5) > 1e-6)
      ASSERT_EQ(vc.label, v.label);

    ASSERT_GE(v.score, 0.0);
    ASSERT_LE(v.score, 1.0);
    ASSERT_EQ(v.label == VerdictLabel::inconclusive || v.reference_separation >= 1.5, true);
  }
}

TEST(Properties, LabelFromScore) {
  EXPECT_EQ(label_for_score(0.65, 0.15), VerdictLabel::rooted_leaning);
  EXPECT_EQ(label_for_score(0.64, 0.15), VerdictLabel::inconclusive);
  EXPECT_EQ(label_for_score(0.35, 0.15), VerdictLabel::stock_leaning);
  EXPECT_EQ(label_for_score(0.5, 0.0), VerdictLabel::rooted_leaning);
}

}  // namespace
}  // namespace rootprobe
