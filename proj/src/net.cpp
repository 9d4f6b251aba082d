#include "rootprobe/net.hpp"

#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "rootprobe/errors.hpp"

namespace rootprobe::net {
namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text, std::uint16_t default_port) {
  Endpoint ep;
  ep.port = default_port;
  std::string_view host = text;
  if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
    host = text.substr(0, colon);
    std::string_view port_text = text.substr(colon + 1);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (port_text.empty() || ec != std::errc{} || ptr != port_text.data() + port_text.size() ||
        port > 65535)
      throw ValidationError("invalid port in endpoint: " + std::string(text));
    ep.port = static_cast<std::uint16_t>(port);
  }
  in_addr addr{};
  std::string host_str(host);
  if (inet_pton(AF_INET, host_str.c_str(), &addr) != 1)
    throw ValidationError("invalid IPv4 address: " + host_str);
  ep.address = ntohl(addr.s_addr);
  return ep;
}

std::string Endpoint::address_string() const {
  in_addr addr{};
  addr.s_addr = htonl(address);
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &addr, buf, sizeof buf);
  return buf;
}

std::string Endpoint::to_string() const { return address_string() + ":" + std::to_string(port); }

sockaddr_in Endpoint::to_sockaddr() const {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(address);
  sa.sin_port = htons(port);
  return sa;
}

Endpoint Endpoint::from_sockaddr(const sockaddr_in& sa) {
  return Endpoint{ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)};
}

FileDescriptor& FileDescriptor::operator=(FileDescriptor&& other) noexcept {
  if (this != &other) reset(other.release());
  return *this;
}

FileDescriptor::~FileDescriptor() { reset(); }

void FileDescriptor::reset(int fd) {
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
}

UdpSocket::UdpSocket(Endpoint local, bool reuse_address)
    : fd_(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0)) {
  if (!fd_.valid()) throw_errno("socket");
  if (reuse_address) {
    int one = 1;
    if (::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one) != 0)
      throw_errno("setsockopt(SO_REUSEADDR)");
  }
  sockaddr_in sa = local.to_sockaddr();
  if (::bind(fd_.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
    throw_errno("bind " + local.to_string());
}

Endpoint UdpSocket::local_endpoint() const {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  if (::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&sa), &len) != 0)
    throw_errno("getsockname");
  return Endpoint::from_sockaddr(sa);
}

void UdpSocket::connect(const Endpoint& peer) {
  sockaddr_in sa = peer.to_sockaddr();
  if (::connect(fd_.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
    throw_errno("connect " + peer.to_string());
}

void UdpSocket::send_to(std::span<const std::uint8_t> payload, const Endpoint& to) {
  sockaddr_in sa = to.to_sockaddr();
  ssize_t n = ::sendto(fd_.get(), payload.data(), payload.size(), 0,
                       reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
  if (n < 0) throw_errno("sendto " + to.to_string());
}

void UdpSocket::send(std::span<const std::uint8_t> payload) {
  if (::send(fd_.get(), payload.data(), payload.size(), 0) < 0) throw_errno("send");
}

ReceiveStatus UdpSocket::receive(Datagram& out, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    auto remaining = std::chrono::ceil<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() < 0) remaining = std::chrono::milliseconds(0);
    pollfd pfd{fd_.get(), POLLIN, 0};
    int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw_errno("poll");
    }
    if (ready == 0) {
      if (std::chrono::steady_clock::now() >= deadline) return ReceiveStatus::timed_out;
      continue;
    }
    std::uint8_t buf[65536];
    sockaddr_in from{};
    socklen_t len = sizeof from;
    ssize_t n = ::recvfrom(fd_.get(), buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNREFUSED) return ReceiveStatus::refused;
      throw_errno("recvfrom");
    }
    out.payload.assign(buf, buf + n);
    out.from = Endpoint::from_sockaddr(from);
    return ReceiveStatus::received;
  }
}

}  // namespace rootprobe::net
