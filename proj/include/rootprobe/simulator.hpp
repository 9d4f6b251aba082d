#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "rootprobe/dns_wire.hpp"
#include "rootprobe/net.hpp"

namespace rootprobe::sim {

enum class LatencyFamily { lognormal, fixed };

/// Response delay model of an emulated hotspot DNS forwarder.
///
/// A lognormal model draws `floor + exp(mu + sigma * Z)`; mu and sigma are fitted so that
/// the total delay has mean `target_mean` and standard deviation `target_stddev`.
/// A fixed model always returns `target_mean`.
struct LatencyModel {
  LatencyFamily family = LatencyFamily::fixed;
  double target_mean = 1.0;
  double target_stddev = 0.0;
  double floor = 0.2;
  double drop_probability = 0.0;
  std::uint64_t seed = 0;
  double mu = 0.0;
  double sigma = 0.0;

  void validate() const;

  /// Closed-form moments of the fitted distribution (floor included).
  double analytic_mean() const;
  double analytic_stddev() const;
};

inline constexpr double kDefaultFloorMs = 0.2;

/// Method-of-moments fit on the floor-shifted delay. stddev == 0 yields a fixed model.
/// Throws InfeasibleModel when mean <= floor, ValidationError for negative inputs.
LatencyModel fit_latency_model(double mean, double stddev, double floor = kDefaultFloorMs);

/// Delay for draw number `index`. A pure function of (model, index).
double sample_delay(const LatencyModel& model, std::uint64_t index);

/// Whether draw number `index` is dropped under `model.drop_probability`.
bool sample_drop(const LatencyModel& model, std::uint64_t index);

/// Sequential sampler; the draw counter is its only state.
class DelaySampler {
 public:
  explicit DelaySampler(LatencyModel model) : model_(model) {}

  struct Draw {
    double delay_ms;
    bool dropped;
  };

  Draw next();
  std::uint64_t draws() const { return index_; }
  const LatencyModel& model() const { return model_; }

 private:
  LatencyModel model_;
  std::uint64_t index_ = 0;
};

struct SimDeviceConfig {
  net::Endpoint listen = net::Endpoint::loopback(0);
  LatencyModel model;
  std::string answer_name = "hotspot.local.";
};

struct ResponderCounters {
  std::uint64_t received = 0;
  std::uint64_t answered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t ignored = 0;
};

/// Running DNS responder. Each well-formed query is answered after a freshly sampled
/// delay; overlapping delays are served independently. Destruction (or stop()) shuts
/// the responder down and discards responses still pending.
class Responder {
 public:
  ~Responder();
  Responder(const Responder&) = delete;
  Responder& operator=(const Responder&) = delete;

  net::Endpoint endpoint() const;
  ResponderCounters counters() const;
  void stop();

 private:
  friend std::unique_ptr<Responder> serve(const SimDeviceConfig& config);
  struct Impl;
  explicit Responder(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Binds and starts the responder. Throws StartupError if the port cannot be bound.
std::unique_ptr<Responder> serve(const SimDeviceConfig& config);

}  // namespace rootprobe::sim
