#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rootprobe/net.hpp"

namespace rootprobe {

enum class Transport { udp, tcp };
enum class PortState { open, closed, filtered, unknown };

std::string_view to_string(Transport t);
std::string_view to_string(PortState s);

struct PortSpec {
  std::uint16_t port = 0;
  Transport transport = Transport::udp;

  /// "53/udp", "443/tcp"; a bare number means udp.
  static PortSpec parse(std::string_view text);

  friend bool operator==(const PortSpec&, const PortSpec&) = default;
};

struct PortResult {
  PortSpec spec;
  PortState state = PortState::unknown;
};

struct ServiceReport {
  std::uint32_t target = 0;
  bool dns_functional = false;
  std::optional<double> dns_rtt_hint_ms;
  std::vector<PortResult> probed_ports;
};

/// 53/udp (DNS), 67/udp (DHCP), 80/tcp, 443/tcp.
std::vector<PortSpec> default_scan_ports();

/// Checks that the target answers DNS and reports the state of each listed port.
///
/// One DNS query goes to `dns_port`/udp; if that port is also listed its state comes
/// from the same exchange. Other UDP ports get a single empty datagram and stay
/// `unknown` unless the kernel reports port-unreachable. TCP ports get one connection
/// attempt: open, closed (refused) or filtered (no answer). Ports are probed concurrently.
ServiceReport scan_services(std::uint32_t target, const std::vector<PortSpec>& ports,
                            double timeout_ms, std::uint16_t dns_port = 53);

}  // namespace rootprobe
