#include "rootprobe/prober.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "rootprobe/errors.hpp"

namespace rootprobe {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

Clock::time_point deadline_after(Clock::time_point start, double ms) {
  return start + std::chrono::duration_cast<Clock::duration>(
                     std::chrono::duration<double, std::milli>(ms));
}

// Answers every query on loopback immediately; used to time the tool's own path.
class NullResponder {
 public:
  NullResponder() : socket_(net::Endpoint::loopback(0)) {
    worker_ = std::thread([this] { loop(); });
  }
  ~NullResponder() {
    stop_ = true;
    worker_.join();
  }
  net::Endpoint endpoint() const { return socket_.local_endpoint(); }

 private:
  void loop() {
    const auto answer = dns::DomainName::parse("null.responder.");
    net::Datagram dgram;
    while (!stop_) {
      auto status = socket_.receive(dgram, Clock::now() + std::chrono::milliseconds(20));
      if (status != net::ReceiveStatus::received) continue;
      try {
        auto query = dns::decode_message(dgram.payload);
        socket_.send_to(dns::encode_ptr_response(query, answer), dgram.from);
      } catch (const Error&) {
      }
    }
  }

  net::UdpSocket socket_;
  std::atomic<bool> stop_{false};
  std::thread worker_;
};

}  // namespace

std::string_view to_string(ThermalState state) {
  switch (state) {
    case ThermalState::warm: return "warm";
    case ThermalState::cold: return "cold";
    case ThermalState::unknown: return "unknown";
  }
  return "unknown";
}

ThermalState parse_thermal_state(std::string_view text) {
  if (text == "warm") return ThermalState::warm;
  if (text == "cold") return ThermalState::cold;
  if (text == "unknown") return ThermalState::unknown;
  throw ValidationError("unknown thermal state: " + std::string(text));
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::answered: return "answered";
    case Outcome::timeout: return "timeout";
    case Outcome::malformed: return "malformed";
    case Outcome::id_mismatch: return "id_mismatch";
  }
  return "timeout";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "answered") return Outcome::answered;
  if (text == "timeout") return Outcome::timeout;
  if (text == "malformed") return Outcome::malformed;
  if (text == "id_mismatch") return Outcome::id_mismatch;
  throw ValidationError("unknown outcome: " + std::string(text));
}

void ProbeConfig::validate() const {
  if (runs < 1) throw ValidationError("runs must be >= 1");
  if (queries_per_run < 1) throw ValidationError("queries_per_run must be >= 1");
  if (!(timeout_ms > 0.0)) throw ValidationError("timeout must be > 0");
  if (!(inter_query_gap_ms >= 0.0)) throw ValidationError("inter-query gap must be >= 0");
  question.validate();
}

OutcomeCounts Campaign::counts() const {
  OutcomeCounts c;
  for (const auto& s : samples) {
    switch (s.outcome) {
      case Outcome::answered: ++c.answered; break;
      case Outcome::timeout: ++c.timeout; break;
      case Outcome::malformed: ++c.malformed; break;
      case Outcome::id_mismatch: ++c.id_mismatch; break;
    }
  }
  return c;
}

double Campaign::loss_rate() const {
  if (samples.empty()) return 0.0;
  auto c = counts();
  return static_cast<double>(c.total() - c.answered) / static_cast<double>(c.total());
}

std::vector<double> Campaign::answered_rtts() const {
  std::vector<double> out;
  for (const auto& s : samples)
    if (s.rtt_ms) out.push_back(*s.rtt_ms);
  return out;
}

std::vector<double> Campaign::answered_rtts(std::size_t run_index) const {
  std::vector<double> out;
  for (const auto& s : samples)
    if (s.run_index == run_index && s.rtt_ms) out.push_back(*s.rtt_ms);
  return out;
}

std::size_t Campaign::run_count() const {
  std::size_t runs = 0;
  for (const auto& s : samples) runs = std::max(runs, s.run_index + 1);
  return runs;
}

namespace detail {

ProbeResult probe(const net::Endpoint& target, const dns::DnsQuestion& question, std::uint16_t id,
                  double timeout_ms, bool recursion_desired, std::uint16_t source_port) {
  if (!(timeout_ms > 0.0)) throw ValidationError("timeout must be > 0");
  auto query = dns::encode_query(question, id, recursion_desired);

  net::UdpSocket socket(net::Endpoint{0, source_port}, source_port != 0);
  socket.connect(target);

  ProbeResult result;
  bool saw_malformed = false;
  bool saw_mismatch = false;
  net::Datagram dgram;

  const auto sent_at = Clock::now();
  socket.send(query);
  const auto deadline = deadline_after(sent_at, timeout_ms);
  for (;;) {
    auto status = socket.receive(dgram, deadline);
    const auto received_at = Clock::now();
    if (status == net::ReceiveStatus::timed_out) break;
    if (status == net::ReceiveStatus::refused) {
      result.refused = true;
      continue;
    }
    dns::DnsMessage msg;
    try {
      msg = dns::decode_message(dgram.payload);
    } catch (const MalformedMessage&) {
      saw_malformed = true;
      continue;
    }
    if (!msg.is_response || msg.id != id) {
      saw_mismatch = true;
      continue;
    }
    result.sample.outcome = Outcome::answered;
    result.sample.rtt_ms = elapsed_ms(sent_at, received_at);
    return result;
  }
  result.sample.outcome = saw_malformed  ? Outcome::malformed
                          : saw_mismatch ? Outcome::id_mismatch
                                         : Outcome::timeout;
  return result;
}

}  // namespace detail

Sample probe_once(const net::Endpoint& target, const dns::DnsQuestion& question, std::uint16_t id,
                  double timeout_ms, bool recursion_desired, std::uint16_t source_port) {
  return detail::probe(target, question, id, timeout_ms, recursion_desired, source_port).sample;
}

double estimate_tool_overhead(const dns::DnsQuestion& question, std::size_t rounds) {
  NullResponder responder;
  const auto target = responder.endpoint();
  std::vector<double> rtts;
  for (std::size_t i = 0; i < rounds; ++i) {
    auto s = probe_once(target, question, static_cast<std::uint16_t>(i + 1), 1000.0);
    if (s.rtt_ms) rtts.push_back(*s.rtt_ms);
  }
  if (rtts.empty()) return 0.0;
  std::nth_element(rtts.begin(), rtts.begin() + rtts.size() / 2, rtts.end());
  return rtts[rtts.size() / 2];
}

Campaign run_campaign(const ProbeConfig& config, const ProgressCallback& on_sample) {
  config.validate();

  Campaign campaign;
  campaign.config = config;
  campaign.started_at = std::chrono::system_clock::now();
  campaign.samples.reserve(config.runs * config.queries_per_run);

  std::mt19937_64 ids(config.id_seed ? *config.id_seed : std::random_device{}());
  std::uniform_int_distribution<unsigned> id_dist(0, 0xFFFF);
  const auto gap = std::chrono::duration<double, std::milli>(config.inter_query_gap_ms);

  try {
    if (config.measure_overhead) campaign.tool_overhead_ms = estimate_tool_overhead(config.question);

    bool first = true;
    for (std::size_t run = 0; run < config.runs; ++run) {
      for (std::size_t q = 0; q < config.discard_first + config.queries_per_run; ++q) {
        if (!first && config.inter_query_gap_ms > 0.0) std::this_thread::sleep_for(gap);
        first = false;
        auto id = static_cast<std::uint16_t>(id_dist(ids));
        Sample s = probe_once(config.target, config.question, id, config.timeout_ms,
                              config.recursion_desired, config.source_port);
        if (q < config.discard_first) continue;
        s.run_index = run;
        s.query_index = q - config.discard_first;
        campaign.samples.push_back(s);
        if (on_sample) on_sample(s);
      }
    }
  } catch (const TransportError& e) {
    campaign.partial = true;
    campaign.abort_reason = e.what();
  }
  return campaign;
}

}  // namespace rootprobe
