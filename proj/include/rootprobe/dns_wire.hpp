#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rootprobe::dns {

inline constexpr std::uint16_t kTypePtr = 12;
inline constexpr std::uint16_t kClassIn = 1;
inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxLabelLength = 63;
inline constexpr std::size_t kMaxNameLength = 255;

/// Domain name as an ordered list of labels, root label implied.
struct DomainName {
  std::vector<std::string> labels;

  /// Parses "a.b.c." or "a.b.c"; throws ValidationError on empty labels or length limits.
  static DomainName parse(std::string_view text);

  /// Dotted form with trailing dot, e.g. "8.8.8.8.in-addr.arpa.".
  std::string to_string() const;

  /// Length of the uncompressed wire encoding, including the terminating zero byte.
  std::size_t wire_length() const;

  void validate() const;

  friend bool operator==(const DomainName&, const DomainName&) = default;
};

struct DnsQuestion {
  DomainName qname;
  std::uint16_t qtype = kTypePtr;
  std::uint16_t qclass = kClassIn;

  void validate() const;

  friend bool operator==(const DnsQuestion&, const DnsQuestion&) = default;
};

/// Header plus question section. Answer records are counted, not parsed.
struct DnsMessage {
  std::uint16_t id = 0;
  bool is_response = false;
  bool recursion_desired = false;
  std::uint8_t response_code = 0;
  std::vector<DnsQuestion> questions;
  std::uint16_t answer_count = 0;
};

/// Reverse-lookup name for a dotted-quad IPv4 address: "1.2.3.4" -> 4.3.2.1.in-addr.arpa.
DomainName ptr_name_for_ipv4(std::string_view address);

/// PTR/IN question for 8.8.8.8.in-addr.arpa., the default probe.
DnsQuestion default_probe_question();

std::vector<std::uint8_t> encode_query(const DnsQuestion& question, std::uint16_t id,
                                       bool recursion_desired = true);

/// Response to `query` echoing its id and first question, with one PTR answer pointing
/// at `answer`. The answer owner name is a compression pointer to the question name.
std::vector<std::uint8_t> encode_ptr_response(const DnsMessage& query, const DomainName& answer,
                                              std::uint32_t ttl = 300);

/// Parses header and question section and skips answer records (compression aware).
/// Never crashes: anything unparseable raises MalformedMessage.
DnsMessage decode_message(std::span<const std::uint8_t> bytes);

}  // namespace rootprobe::dns
