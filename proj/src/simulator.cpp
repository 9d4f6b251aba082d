#include "rootprobe/simulator.hpp"

#include <sys/prctl.h>

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numbers>
#include <queue>
#include <thread>
#include <vector>

#include "rootprobe/errors.hpp"

namespace rootprobe::sim {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kDelayStream = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kDropStream = 0xbb67ae8584caa73bULL;

// Sleeping overshoots by tens of microseconds; the sender wakes this early and spins
// to the due time so the emulated delay is not inflated.
constexpr auto kSpinWindow = std::chrono::microseconds(300);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1], a pure function of (seed, stream, index, lane).
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t lane) {
  std::uint64_t h = splitmix64(splitmix64(seed ^ stream) ^ (index * 2 + lane));
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, std::uint64_t index) {
  double u1 = uniform(seed, kDelayStream, index, 0);
  double u2 = uniform(seed, kDelayStream, index, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void LatencyModel::validate() const {
  if (!(target_mean > 0.0)) throw ValidationError("latency model mean must be > 0");
  if (!(target_stddev >= 0.0)) throw ValidationError("latency model stddev must be >= 0");
  if (!(floor >= 0.0)) throw ValidationError("latency model floor must be >= 0");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
    throw ValidationError("drop probability must lie in [0, 1]");
  if (family == LatencyFamily::fixed && target_stddev != 0.0)
    throw ValidationError("fixed latency model requires stddev = 0");
}

double LatencyModel::analytic_mean() const {
  if (family == LatencyFamily::fixed) return target_mean;
  return floor + std::exp(mu + sigma * sigma / 2.0);
}

double LatencyModel::analytic_stddev() const {
  if (family == LatencyFamily::fixed) return 0.0;
  double s2 = sigma * sigma;
  return std::sqrt(std::expm1(s2) * std::exp(2.0 * mu + s2));
}

LatencyModel fit_latency_model(double mean, double stddev, double floor) {
  if (!(stddev >= 0.0)) throw ValidationError("stddev must be >= 0");
  if (!(floor >= 0.0)) throw ValidationError("floor must be >= 0");
  if (!(mean > floor))
    throw InfeasibleModel("mean " + std::to_string(mean) + " ms must exceed floor " +
                          std::to_string(floor) + " ms");
  LatencyModel model;
  model.target_mean = mean;
  model.target_stddev = stddev;
  model.floor = floor;
  if (stddev == 0.0) {
    model.family = LatencyFamily::fixed;
    return model;
  }
  model.family = LatencyFamily::lognormal;
  double m = mean - floor;
  double sigma2 = std::log1p((stddev * stddev) / (m * m));
  model.sigma = std::sqrt(sigma2);
  model.mu = std::log(m) - sigma2 / 2.0;
  return model;
}

double sample_delay(const LatencyModel& model, std::uint64_t index) {
  if (model.family == LatencyFamily::fixed) return model.target_mean;
  return model.floor + std::exp(model.mu + model.sigma * standard_normal(model.seed, index));
}

bool sample_drop(const LatencyModel& model, std::uint64_t index) {
  if (model.drop_probability <= 0.0) return false;
  if (model.drop_probability >= 1.0) return true;
  return uniform(model.seed, kDropStream, index, 0) <= model.drop_probability;
}

DelaySampler::Draw DelaySampler::next() {
  std::uint64_t i = index_++;
  return Draw{sample_delay(model_, i), sample_drop(model_, i)};
}

struct Responder::Impl {
  struct Pending {
    Clock::time_point due;
    std::vector<std::uint8_t> payload;
    net::Endpoint to;
    bool operator>(const Pending& other) const { return due > other.due; }
  };

  Impl(const SimDeviceConfig& cfg, net::UdpSocket sock)
      : config(cfg), socket(std::move(sock)), sampler(cfg.model),
        answer(dns::DomainName::parse(cfg.answer_name)) {}

  void receive_loop() {
    net::Datagram dgram;
    while (!stopping) {
      net::ReceiveStatus status;
      try {
        status = socket.receive(dgram, Clock::now() + std::chrono::milliseconds(20));
      } catch (const TransportError&) {
        continue;
      }
      if (status != net::ReceiveStatus::received) continue;
      const auto arrived = Clock::now();

      std::vector<std::uint8_t> response;
      try {
        auto query = dns::decode_message(dgram.payload);
        if (query.is_response || query.questions.empty()) throw MalformedMessage("not a query");
        response = dns::encode_ptr_response(query, answer);
      } catch (const Error&) {
        std::lock_guard lock(mutex);
        ++counters.received;
        ++counters.ignored;
        continue;
      }

      auto draw = sampler.next();
      std::lock_guard lock(mutex);
      ++counters.received;
      if (draw.dropped) {
        ++counters.dropped;
        continue;
      }
      auto due = arrived + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double, std::milli>(draw.delay_ms));
      queue.push(Pending{due, std::move(response), dgram.from});
      wake.notify_one();
    }
  }

  void send_loop() {
    ::prctl(PR_SET_TIMERSLACK, 1UL, 0, 0, 0);
    std::unique_lock lock(mutex);
    while (!stopping) {
      if (queue.empty()) {
        wake.wait(lock);
        continue;
      }
      auto due = queue.top().due;
      if (Clock::now() < due - kSpinWindow) {
        wake.wait_until(lock, due - kSpinWindow);
        continue;
      }
      Pending item = queue.top();
      queue.pop();
      lock.unlock();
      while (Clock::now() < item.due) std::this_thread::yield();
      try {
        socket.send_to(item.payload, item.to);
      } catch (const TransportError&) {
      }
      lock.lock();
      ++counters.answered;
    }
  }

  void start() {
    receiver = std::thread([this] { receive_loop(); });
    sender = std::thread([this] { send_loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(mutex);
      if (stopping) return;
      stopping = true;
    }
    wake.notify_all();
    if (receiver.joinable()) receiver.join();
    if (sender.joinable()) sender.join();
  }

  SimDeviceConfig config;
  net::UdpSocket socket;
  DelaySampler sampler;  // owned by the receive thread
  dns::DomainName answer;

  mutable std::mutex mutex;
  std::condition_variable wake;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  ResponderCounters counters;
  std::atomic<bool> stopping{false};
  std::thread receiver;
  std::thread sender;
};

Responder::Responder(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Responder::~Responder() { stop(); }

net::Endpoint Responder::endpoint() const { return impl_->socket.local_endpoint(); }

ResponderCounters Responder::counters() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->counters;
}

void Responder::stop() {
  if (impl_) impl_->stop();
}

std::unique_ptr<Responder> serve(const SimDeviceConfig& config) {
  config.model.validate();
  dns::DomainName::parse(config.answer_name);
  std::unique_ptr<Responder::Impl> impl;
  try {
    impl = std::make_unique<Responder::Impl>(config, net::UdpSocket(config.listen));
  } catch (const TransportError& e) {
    throw StartupError(std::string("simulator failed to start: ") + e.what());
  }
  impl->start();
  return std::unique_ptr<Responder>(new Responder(std::move(impl)));
}

}  // namespace rootprobe::sim
