#include "rootprobe/dns_wire.hpp"

#include <charconv>
#include <optional>

#include "rootprobe/errors.hpp"

namespace rootprobe::dns {
namespace {

constexpr std::uint16_t kFlagQr = 0x8000;
constexpr std::uint16_t kFlagRd = 0x0100;
constexpr std::uint16_t kFlagRa = 0x0080;
constexpr std::uint8_t kPointerMask = 0xC0;
constexpr int kMaxPointerJumps = 64;

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
}

void put_name(std::vector<std::uint8_t>& out, const DomainName& name) {
  for (const auto& label : name.labels) {
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
}

void put_header(std::vector<std::uint8_t>& out, std::uint16_t id, std::uint16_t flags,
                std::uint16_t qdcount, std::uint16_t ancount) {
  put16(out, id);
  put16(out, flags);
  put16(out, qdcount);
  put16(out, ancount);
  put16(out, 0);
  put16(out, 0);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return offset_; }

  std::uint8_t u8() {
    need(1);
    return bytes_[offset_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>((bytes_[offset_] << 8) | bytes_[offset_ + 1]);
    offset_ += 2;
    return v;
  }

  void skip(std::size_t n) {
    need(n);
    offset_ += n;
  }

  // Reads a possibly compressed name starting at the cursor. The cursor ends after the
  // first pointer (or terminating zero) encountered in the original stream.
  DomainName name() {
    DomainName result;
    std::size_t total = 1;
    std::size_t pos = offset_;
    std::optional<std::size_t> resume;
    int jumps = 0;
    for (;;) {
      if (pos >= bytes_.size()) throw MalformedMessage("name runs past end of message");
      std::uint8_t len = bytes_[pos];
      if ((len & kPointerMask) == kPointerMask) {
        if (pos + 1 >= bytes_.size()) throw MalformedMessage("truncated compression pointer");
        std::size_t target = (static_cast<std::size_t>(len & 0x3F) << 8) | bytes_[pos + 1];
        if (!resume) resume = pos + 2;
        if (++jumps > kMaxPointerJumps) throw MalformedMessage("compression pointer loop");
        if (target >= bytes_.size()) throw MalformedMessage("compression pointer out of range");
        pos = target;
        continue;
      }
      if ((len & kPointerMask) != 0) throw MalformedMessage("reserved label type");
      if (len == 0) {
        ++pos;
        break;
      }
      if (pos + 1 + len > bytes_.size()) throw MalformedMessage("label runs past end of message");
      std::string label(reinterpret_cast<const char*>(&bytes_[pos + 1]), len);
      if (label.find('.') != std::string::npos) throw MalformedMessage("label contains a dot");
      total += 1 + len;
      if (total > kMaxNameLength) throw MalformedMessage("name exceeds 255 bytes");
      result.labels.push_back(std::move(label));
      pos += 1 + len;
    }
    offset_ = resume ? *resume : pos;
    return result;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - offset_ < n) throw MalformedMessage("message truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::optional<unsigned> parse_octet(std::string_view part) {
  if (part.empty() || part.size() > 3) return std::nullopt;
  if (part.size() > 1 && part.front() == '0') return std::nullopt;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
  if (ec != std::errc{} || ptr != part.data() + part.size() || value > 255) return std::nullopt;
  return value;
}

}  // namespace

DomainName DomainName::parse(std::string_view text) {
  DomainName name;
  if (text == ".") return name;
  if (!text.empty() && text.back() == '.') text.remove_suffix(1);
  if (text.empty()) throw ValidationError("empty domain name");
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = text.find('.', start);
    name.labels.emplace_back(text.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  name.validate();
  return name;
}

std::string DomainName::to_string() const {
  if (labels.empty()) return ".";
  std::string out;
  for (const auto& label : labels) {
    out += label;
    out += '.';
  }
  return out;
}

std::size_t DomainName::wire_length() const {
  std::size_t n = 1;
  for (const auto& label : labels) n += 1 + label.size();
  return n;
}

void DomainName::validate() const {
  for (const auto& label : labels) {
    if (label.empty()) throw ValidationError("empty label in domain name");
    if (label.size() > kMaxLabelLength)
      throw ValidationError("label longer than 63 bytes: " + label.substr(0, 16) + "...");
    if (label.find('.') != std::string::npos) throw ValidationError("label contains a dot");
  }
  if (wire_length() > kMaxNameLength) throw ValidationError("domain name longer than 255 bytes");
}

void DnsQuestion::validate() const { qname.validate(); }

DomainName ptr_name_for_ipv4(std::string_view address) {
  std::vector<std::string> octets;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = address.find('.', start);
    std::string_view part =
        address.substr(start, dot == std::string_view::npos ? dot : dot - start);
    auto octet = parse_octet(part);
    if (!octet) throw ValidationError("invalid IPv4 address: " + std::string(address));
    octets.push_back(std::to_string(*octet));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (octets.size() != 4) throw ValidationError("invalid IPv4 address: " + std::string(address));

  DomainName name;
  name.labels.assign(octets.rbegin(), octets.rend());
  name.labels.emplace_back("in-addr");
  name.labels.emplace_back("arpa");
  return name;
}

DnsQuestion default_probe_question() {
  return DnsQuestion{ptr_name_for_ipv4("8.8.8.8"), kTypePtr, kClassIn};
}

std::vector<std::uint8_t> encode_query(const DnsQuestion& question, std::uint16_t id,
                                       bool recursion_desired) {
  question.validate();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + question.qname.wire_length() + 4);
  put_header(out, id, recursion_desired ? kFlagRd : 0, 1, 0);
  put_name(out, question.qname);
  put16(out, question.qtype);
  put16(out, question.qclass);
  return out;
}

std::vector<std::uint8_t> encode_ptr_response(const DnsMessage& query, const DomainName& answer,
                                              std::uint32_t ttl) {
  if (query.questions.empty()) throw ValidationError("query has no question to answer");
  answer.validate();
  const DnsQuestion& q = query.questions.front();
  q.validate();

  std::uint16_t flags = kFlagQr | kFlagRa;
  if (query.recursion_desired) flags |= kFlagRd;

  std::vector<std::uint8_t> out;
  put_header(out, query.id, flags, 1, 1);
  put_name(out, q.qname);
  put16(out, q.qtype);
  put16(out, q.qclass);
  // Owner name: pointer to the question name at offset 12.
  out.push_back(kPointerMask);
  out.push_back(static_cast<std::uint8_t>(kHeaderSize));
  put16(out, kTypePtr);
  put16(out, kClassIn);
  put32(out, ttl);
  put16(out, static_cast<std::uint16_t>(answer.wire_length()));
  put_name(out, answer);
  return out;
}

DnsMessage decode_message(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  DnsMessage msg;
  msg.id = in.u16();
  std::uint16_t flags = in.u16();
  msg.is_response = (flags & kFlagQr) != 0;
  msg.recursion_desired = (flags & kFlagRd) != 0;
  msg.response_code = static_cast<std::uint8_t>(flags & 0x000F);
  std::uint16_t qdcount = in.u16();
  msg.answer_count = in.u16();
  in.u16();  // nscount
  in.u16();  // arcount

  msg.questions.reserve(qdcount);
  for (std::uint16_t i = 0; i < qdcount; ++i) {
    DnsQuestion q;
    q.qname = in.name();
    q.qtype = in.u16();
    q.qclass = in.u16();
    msg.questions.push_back(std::move(q));
  }
  for (std::uint16_t i = 0; i < msg.answer_count; ++i) {
    in.name();
    in.skip(8);  // type, class, ttl
    std::uint16_t rdlength = in.u16();
    in.skip(rdlength);
  }
  return msg;
}

}  // namespace rootprobe::dns
