#pragma once

#include <netinet/in.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rootprobe::net {

/// IPv4 address plus port, host byte order.
struct Endpoint {
  std::uint32_t address = 0;
  std::uint16_t port = 0;

  /// Accepts "a.b.c.d" or "a.b.c.d:port"; `default_port` applies when no port is given.
  static Endpoint parse(std::string_view text, std::uint16_t default_port = 53);
  static Endpoint loopback(std::uint16_t port) { return Endpoint{0x7F000001u, port}; }

  std::string address_string() const;
  std::string to_string() const;
  sockaddr_in to_sockaddr() const;
  static Endpoint from_sockaddr(const sockaddr_in& sa);

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Owning file descriptor.
class FileDescriptor {
 public:
  FileDescriptor() = default;
  explicit FileDescriptor(int fd) : fd_(fd) {}
  FileDescriptor(FileDescriptor&& other) noexcept : fd_(other.release()) {}
  FileDescriptor& operator=(FileDescriptor&& other) noexcept;
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  ~FileDescriptor();

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1);

 private:
  int fd_ = -1;
};

struct Datagram {
  std::vector<std::uint8_t> payload;
  Endpoint from;
};

enum class ReceiveStatus { received, timed_out, refused };

/// Blocking UDP/IPv4 socket. All failures other than timeouts raise TransportError.
class UdpSocket {
 public:
  /// Binds to `local` (port 0 picks an ephemeral port).
  explicit UdpSocket(Endpoint local = Endpoint{0, 0}, bool reuse_address = false);

  Endpoint local_endpoint() const;

  /// Restricts traffic to `peer`, which lets the kernel surface ICMP port-unreachable
  /// as ECONNREFUSED on the next receive.
  void connect(const Endpoint& peer);

  void send_to(std::span<const std::uint8_t> payload, const Endpoint& to);
  void send(std::span<const std::uint8_t> payload);

  /// Waits until `deadline` for one datagram.
  ReceiveStatus receive(Datagram& out, std::chrono::steady_clock::time_point deadline);

  int fd() const { return fd_.get(); }

 private:
  FileDescriptor fd_;
};

}  // namespace rootprobe::net
