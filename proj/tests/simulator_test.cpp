#include "rootprobe/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "oracles.hpp"
#include "rootprobe/classifier.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/prober.hpp"

namespace rootprobe::sim {
namespace {

TEST(Fit, S5StockMomentsRoundTrip) {
  auto m = fit_latency_model(5.90, 1.64, 0.0);
  EXPECT_EQ(m.family, LatencyFamily::lognormal);
  EXPECT_TRUE(oracle::close_rel(oracle::lognormal_mean(m.mu, m.sigma, 0.0), 5.90, 1e-9));
  EXPECT_TRUE(oracle::close_rel(oracle::lognormal_stddev(m.mu, m.sigma), 1.64, 1e-9));
}

TEST(Fit, S5RootedSigma) {
  auto m = fit_latency_model(16.13, 43.61, 0.0);
  double expected_sigma2 = std::log(1.0 + std::pow(43.61 / 16.13, 2));
  EXPECT_TRUE(oracle::close_rel(m.sigma * m.sigma, expected_sigma2, 1e-12));
  EXPECT_TRUE(oracle::close_rel(oracle::lognormal_mean(m.mu, m.sigma, 0.0), 16.13, 1e-9));
  EXPECT_TRUE(oracle::close_rel(oracle::lognormal_stddev(m.mu, m.sigma), 43.61, 1e-9));
}

TEST(Fit, AllTableRowsWithDefaultFloor) {
  for (const auto& profile : builtin_profiles()) {
    for (const auto& run : profile.runs) {
      auto m = fit_latency_model(run.mean, run.stddev);
      EXPECT_TRUE(oracle::close_rel(oracle::lognormal_mean(m.mu, m.sigma, m.floor), run.mean, 1e-9));
      EXPECT_TRUE(oracle::close_rel(oracle::lognormal_stddev(m.mu, m.sigma), run.stddev, 1e-9));
      EXPECT_TRUE(oracle::close_rel(m.analytic_mean(), run.mean, 1e-9));
      EXPECT_TRUE(oracle::close_rel(m.analytic_stddev(), run.stddev, 1e-9));
    }
  }
}

TEST(Fit, ZeroStddevIsFixed) {
  auto m = fit_latency_model(10.0, 0.0);
  EXPECT_EQ(m.family, LatencyFamily::fixed);
  EXPECT_EQ(sample_delay(m, 0), 10.0);
  EXPECT_EQ(sample_delay(m, 12345), 10.0);
}

TEST(Fit, MeanAtOrBelowFloorIsInfeasible) {
  EXPECT_THROW(fit_latency_model(0.2, 1.0, 0.2), InfeasibleModel);
  EXPECT_THROW(fit_latency_model(0.1, 1.0), InfeasibleModel);
  EXPECT_THROW(fit_latency_model(5.0, -1.0), ValidationError);
}

TEST(Sample, FixedModel) {
  LatencyModel m;
  m.family = LatencyFamily::fixed;
  m.target_mean = 5.0;
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(sample_delay(m, i), 5.0);
}

TEST(Sample, DeterministicPerSeedAndIndex) {
  auto m = fit_latency_model(5.90, 1.64);
  m.seed = 42;
  auto other = m;
  other.seed = 43;
  int differing = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_delay(m, i), sample_delay(m, i));
    if (sample_delay(m, i) != sample_delay(other, i)) ++differing;
    EXPECT_GE(sample_delay(m, i), m.floor);
  }
  EXPECT_GT(differing, 90);

  DelaySampler a(m), b(m);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.next().delay_ms, b.next().delay_ms);
  EXPECT_EQ(a.draws(), 50u);
}

TEST(Sample, EmpiricalMeanWithinThreeStandardErrors) {
  auto m = fit_latency_model(5.90, 1.64);
  m.seed = 2024;
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += sample_delay(m, static_cast<std::uint64_t>(i));
  EXPECT_NEAR(sum / n, 5.90, 3.0 * 1.64 / std::sqrt(static_cast<double>(n)));
}

TEST(Sample, DropProbabilityExtremesAndRate) {
  auto m = fit_latency_model(5.0, 1.0);
  m.drop_probability = 1.0;
  EXPECT_TRUE(sample_drop(m, 0));
  m.drop_probability = 0.0;
  EXPECT_FALSE(sample_drop(m, 0));
  m.drop_probability = 0.25;
  int drops = 0;
  for (std::uint64_t i = 0; i < 20000; ++i) drops += sample_drop(m, i);
  EXPECT_NEAR(drops / 20000.0, 0.25, 0.02);
}

TEST(Serve, AnswersWithMatchingIdAfterFixedDelay) {
  SimDeviceConfig cfg;
  cfg.model = fit_latency_model(5.0, 0.0);
  auto responder = serve(cfg);
  auto s = probe_once(responder->endpoint(), dns::default_probe_question(), 777, 1000.0);
  ASSERT_EQ(s.outcome, Outcome::answered);
  EXPECT_GE(*s.rtt_ms, 5.0);
  EXPECT_LT(*s.rtt_ms, 5.0 + 15.0);
}

TEST(Serve, DropAllMeansTimeouts) {
  SimDeviceConfig cfg;
  cfg.model = fit_latency_model(1.0, 0.0);
  cfg.model.drop_probability = 1.0;
  auto responder = serve(cfg);
  for (std::uint16_t id = 0; id < 3; ++id) {
    auto s = probe_once(responder->endpoint(), dns::default_probe_question(), id, 50.0);
    EXPECT_EQ(s.outcome, Outcome::timeout);
  }
  EXPECT_EQ(responder->counters().dropped, 3u);
}

TEST(Serve, IgnoresMalformedDatagrams) {
  SimDeviceConfig cfg;
  cfg.model = fit_latency_model(1.0, 0.0);
  auto responder = serve(cfg);
  net::UdpSocket sock;
  std::vector<std::uint8_t> junk = {1, 2, 3};
  sock.send_to(junk, responder->endpoint());
  auto s = probe_once(responder->endpoint(), dns::default_probe_question(), 9, 500.0);
  EXPECT_EQ(s.outcome, Outcome::answered);
  EXPECT_EQ(responder->counters().ignored, 1u);
}

TEST(Serve, SlowResponseDoesNotBlockLaterQueries) {
  SimDeviceConfig cfg;
  cfg.model = fit_latency_model(300.0, 0.0);
  auto responder = serve(cfg);
  auto target = responder->endpoint();
  auto q = dns::default_probe_question();

  Sample first, second;
  auto start = std::chrono::steady_clock::now();
  std::thread t1([&] { first = probe_once(target, q, 1, 2000.0); });
  std::thread t2([&] { second = probe_once(target, q, 2, 2000.0); });
  t1.join();
  t2.join();
  auto total = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
  EXPECT_EQ(first.outcome, Outcome::answered);
  EXPECT_EQ(second.outcome, Outcome::answered);
  EXPECT_LT(total.count(), 550.0);
}

TEST(Serve, BindFailureIsStartupError) {
  SimDeviceConfig cfg;
  cfg.model = fit_latency_model(1.0, 0.0);
  auto first = serve(cfg);
  SimDeviceConfig clash = cfg;
  clash.listen = first->endpoint();
  EXPECT_THROW(serve(clash), StartupError);
}

TEST(Serve, StopIsIdempotent) {
  SimDeviceConfig cfg;
  cfg.model = fit_latency_model(1.0, 0.0);
  auto responder = serve(cfg);
  responder->stop();
  responder->stop();
}

}  // namespace
}  // namespace rootprobe::sim
