#include "rootprobe/service_scan.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <future>
#include <random>
#include <string>

#include "rootprobe/errors.hpp"
#include "rootprobe/prober.hpp"

namespace rootprobe {
namespace {

using Clock = std::chrono::steady_clock;

PortState probe_tcp(const net::Endpoint& target, double timeout_ms) {
  net::FileDescriptor fd(::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
  if (!fd.valid()) return PortState::unknown;
  sockaddr_in sa = target.to_sockaddr();
  if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) == 0)
    return PortState::open;
  if (errno == ECONNREFUSED) return PortState::closed;
  if (errno != EINPROGRESS) return PortState::unknown;

  pollfd pfd{fd.get(), POLLOUT, 0};
  int ready;
  do {
    ready = ::poll(&pfd, 1, static_cast<int>(timeout_ms));
  } while (ready < 0 && errno == EINTR);
  if (ready == 0) return PortState::filtered;
  if (ready < 0) return PortState::unknown;
  int err = 0;
  socklen_t len = sizeof err;
  ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
  if (err == 0) return PortState::open;
  if (err == ECONNREFUSED) return PortState::closed;
  if (err == ETIMEDOUT || err == EHOSTUNREACH || err == ENETUNREACH) return PortState::filtered;
  return PortState::unknown;
}

PortState probe_udp(const net::Endpoint& target, double timeout_ms) {
  try {
    net::UdpSocket socket;
    socket.connect(target);
    socket.send(std::span<const std::uint8_t>{});
    net::Datagram dgram;
    auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double, std::milli>(timeout_ms));
    switch (socket.receive(dgram, deadline)) {
      case net::ReceiveStatus::received: return PortState::open;
      case net::ReceiveStatus::refused: return PortState::closed;
      case net::ReceiveStatus::timed_out: return PortState::unknown;
    }
  } catch (const TransportError&) {
  }
  return PortState::unknown;
}

struct DnsCheck {
  bool functional = false;
  std::optional<double> rtt_ms;
  PortState state = PortState::unknown;
};

DnsCheck probe_dns(const net::Endpoint& target, double timeout_ms) {
  DnsCheck check;
  try {
    auto id = static_cast<std::uint16_t>(std::random_device{}() & 0xFFFF);
    auto result = detail::probe(target, dns::default_probe_question(), id, timeout_ms, true, 0);
    if (result.sample.outcome == Outcome::answered) {
      check.functional = true;
      check.rtt_ms = result.sample.rtt_ms;
      check.state = PortState::open;
    } else if (result.sample.outcome != Outcome::timeout) {
      // Something answered, just not a usable DNS response.
      check.state = PortState::open;
    } else if (result.refused) {
      check.state = PortState::closed;
    }
  } catch (const Error&) {
  }
  return check;
}

}  // namespace

std::string_view to_string(Transport t) { return t == Transport::udp ? "udp" : "tcp"; }

std::string_view to_string(PortState s) {
  switch (s) {
    case PortState::open: return "open";
    case PortState::closed: return "closed";
    case PortState::filtered: return "filtered";
    case PortState::unknown: return "unknown";
  }
  return "unknown";
}

PortSpec PortSpec::parse(std::string_view text) {
  PortSpec spec;
  std::string_view number = text;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    number = text.substr(0, slash);
    auto proto = text.substr(slash + 1);
    if (proto == "udp") {
      spec.transport = Transport::udp;
    } else if (proto == "tcp") {
      spec.transport = Transport::tcp;
    } else {
      throw ValidationError("unknown transport in port spec: " + std::string(text));
    }
  }
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), port);
  if (number.empty() || ec != std::errc{} || ptr != number.data() + number.size() || port == 0 ||
      port > 65535)
    throw ValidationError("invalid port spec: " + std::string(text));
  spec.port = static_cast<std::uint16_t>(port);
  return spec;
}

std::vector<PortSpec> default_scan_ports() {
  return {{53, Transport::udp}, {67, Transport::udp}, {80, Transport::tcp}, {443, Transport::tcp}};
}

ServiceReport scan_services(std::uint32_t target, const std::vector<PortSpec>& ports,
                            double timeout_ms, std::uint16_t dns_port) {
  if (!(timeout_ms > 0.0)) throw ValidationError("timeout must be > 0");

  ServiceReport report;
  report.target = target;

  auto dns_future = std::async(std::launch::async, probe_dns, net::Endpoint{target, dns_port},
                               timeout_ms);

  std::vector<std::future<PortState>> futures;
  std::vector<std::size_t> dns_slots;
  report.probed_ports.reserve(ports.size());
  for (const auto& spec : ports) {
    bool seen = std::any_of(report.probed_ports.begin(), report.probed_ports.end(),
                            [&](const PortResult& r) { return r.spec == spec; });
    if (seen) continue;
    report.probed_ports.push_back(PortResult{spec, PortState::unknown});
    net::Endpoint ep{target, spec.port};
    if (spec.transport == Transport::udp && spec.port == dns_port) {
      dns_slots.push_back(report.probed_ports.size() - 1);
      futures.emplace_back();
    } else if (spec.transport == Transport::udp) {
      futures.push_back(std::async(std::launch::async, probe_udp, ep, timeout_ms));
    } else {
      futures.push_back(std::async(std::launch::async, probe_tcp, ep, timeout_ms));
    }
  }

  DnsCheck dns = dns_future.get();
  report.dns_functional = dns.functional;
  report.dns_rtt_hint_ms = dns.rtt_ms;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    if (futures[i].valid()) report.probed_ports[i].state = futures[i].get();
  }
  for (auto slot : dns_slots) report.probed_ports[slot].state = dns.state;
  return report;
}

}  // namespace rootprobe
