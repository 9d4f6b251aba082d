#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rootprobe/dns_wire.hpp"
#include "rootprobe/net.hpp"

namespace rootprobe {

enum class ThermalState { warm, cold, unknown };

std::string_view to_string(ThermalState state);
ThermalState parse_thermal_state(std::string_view text);

enum class Outcome { answered, timeout, malformed, id_mismatch };

std::string_view to_string(Outcome outcome);
Outcome parse_outcome(std::string_view text);

struct ProbeConfig {
  net::Endpoint target = net::Endpoint{0, 53};
  std::size_t runs = 3;
  std::size_t queries_per_run = 100;
  double inter_query_gap_ms = 100.0;
  double timeout_ms = 2000.0;
  dns::DnsQuestion question = dns::default_probe_question();
  bool recursion_desired = true;
  ThermalState thermal_state = ThermalState::unknown;
  /// 0 opens a fresh ephemeral source port for every query.
  std::uint16_t source_port = 0;
  /// Leading queries per run sent but not recorded (ARP/neighbour warm-up).
  std::size_t discard_first = 0;
  /// Seed for transaction ids; unset draws from std::random_device.
  std::optional<std::uint64_t> id_seed;
  bool measure_overhead = true;

  /// Throws ValidationError when runs, queries_per_run or timeout are out of range.
  void validate() const;
};

/// One timed query. `rtt_ms` is present iff outcome == answered.
struct Sample {
  std::size_t run_index = 0;
  std::size_t query_index = 0;
  std::optional<double> rtt_ms;
  Outcome outcome = Outcome::timeout;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct OutcomeCounts {
  std::size_t answered = 0;
  std::size_t timeout = 0;
  std::size_t malformed = 0;
  std::size_t id_mismatch = 0;

  std::size_t total() const { return answered + timeout + malformed + id_mismatch; }
};

struct Campaign {
  ProbeConfig config;
  std::vector<Sample> samples;
  std::chrono::system_clock::time_point started_at;
  /// Loopback round trip of the encode/send/receive/decode path. Raw rtts are never
  /// adjusted by it.
  double tool_overhead_ms = 0.0;
  /// Set when a transport error aborted the campaign; samples then hold what completed.
  bool partial = false;
  std::string abort_reason;

  OutcomeCounts counts() const;
  /// Fraction of samples without an answer.
  double loss_rate() const;
  std::vector<double> answered_rtts() const;
  std::vector<double> answered_rtts(std::size_t run_index) const;
  std::size_t run_count() const;
};

/// Sends one query and waits for the response with the same transaction id. Datagrams
/// with another id (or that fail to decode) are discarded and waiting continues. If the
/// deadline passes, the outcome is `timeout`, or `malformed`/`id_mismatch` when only such
/// datagrams arrived. Throws TransportError for socket failures.
Sample probe_once(const net::Endpoint& target, const dns::DnsQuestion& question, std::uint16_t id,
                  double timeout_ms, bool recursion_desired = true, std::uint16_t source_port = 0);

/// Median loopback round trip against an in-process null responder.
double estimate_tool_overhead(const dns::DnsQuestion& question, std::size_t rounds = 15);

using ProgressCallback = std::function<void(const Sample&)>;

/// Runs `runs` x `queries_per_run` strictly sequential queries. Transport errors end the
/// campaign early with `partial` set instead of throwing.
Campaign run_campaign(const ProbeConfig& config, const ProgressCallback& on_sample = {});

namespace detail {

struct ProbeResult {
  Sample sample;
  bool refused = false;
};

/// probe_once that also reports whether the kernel surfaced an ICMP port-unreachable.
ProbeResult probe(const net::Endpoint& target, const dns::DnsQuestion& question, std::uint16_t id,
                  double timeout_ms, bool recursion_desired, std::uint16_t source_port);

}  // namespace detail

}  // namespace rootprobe
