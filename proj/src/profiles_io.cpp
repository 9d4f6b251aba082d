#include "rootprobe/profiles_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rootprobe/errors.hpp"

namespace rootprobe::io {
namespace {

using nlohmann::json;

json run_to_json(const stats::SummaryStats& s) {
  json j = {{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}};
  if (s.min) j["min"] = *s.min;
  if (s.max) j["max"] = *s.max;
  if (s.median) j["median"] = *s.median;
  if (s.p95) j["p95"] = *s.p95;
  return j;
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "." + key + ": missing field");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  return number(obj, key, where);
}

std::string text(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

stats::SummaryStats run_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const json& n = field(j, "n", where);
  if (!n.is_number_unsigned() || n.get<std::uint64_t>() < 1)
    throw ParseError(where + ".n: expected a positive integer");
  stats::SummaryStats s;
  s.n = n.get<std::size_t>();
  s.mean = number(j, "mean", where);
  s.stddev = number(j, "stddev", where);
  if (s.stddev < 0.0) throw ParseError(where + ".stddev: must be >= 0");
  s.min = optional_number(j, "min", where);
  s.max = optional_number(j, "max", where);
  s.median = optional_number(j, "median", where);
  s.p95 = optional_number(j, "p95", where);
  return s;
}

template <typename Fn>
auto with_context(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

std::string format_rtt(double ms) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ms, std::chars_format::fixed, 3);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line_no, const char* column) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line_no) + ", column " + column + ": invalid value '" +
                     std::string(s) + "'");
  return value;
}

}  // namespace

std::string profiles_to_json(const std::vector<DeviceProfile>& profiles) {
  json list = json::array();
  for (const auto& p : profiles) {
    p.validate();
    json runs = json::array();
    for (const auto& r : p.runs) runs.push_back(run_to_json(r));
    list.push_back({{"device_label", p.device_label},
                    {"configuration", to_string(p.configuration)},
                    {"thermal_state", to_string(p.thermal_state)},
                    {"runs", std::move(runs)}});
  }
  json doc = {{"format_version", kProfileFormatVersion}, {"profiles", std::move(list)}};
  return doc.dump(2) + "\n";
}

std::vector<DeviceProfile> profiles_from_json(std::string_view input) {
  json doc;
  try {
    doc = json::parse(input.begin(), input.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("profile file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("profile file: top level must be an object");
  const json& version = field(doc, "format_version", "profile file");
  if (!version.is_number_integer()) throw ParseError("profile file.format_version: expected an integer");
  if (version.get<long long>() != kProfileFormatVersion)
    throw VersionError("unsupported profile format_version " + version.dump() + " (expected " +
                       std::to_string(kProfileFormatVersion) + ")");
  const json& list = field(doc, "profiles", "profile file");
  if (!list.is_array()) throw ParseError("profile file.profiles: expected an array");

  std::vector<DeviceProfile> profiles;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "profiles[" + std::to_string(i) + "]";
    const json& p = list[i];
    if (!p.is_object()) throw ParseError(where + ": expected an object");
    DeviceProfile profile;
    profile.device_label = text(p, "device_label", where);
    profile.configuration = with_context(where + ".configuration", [&] {
      return parse_configuration(text(p, "configuration", where));
    });
    profile.thermal_state = with_context(where + ".thermal_state", [&] {
      return parse_thermal_state(text(p, "thermal_state", where));
    });
    const json& runs = field(p, "runs", where);
    if (!runs.is_array()) throw ParseError(where + ".runs: expected an array");
    for (std::size_t r = 0; r < runs.size(); ++r)
      profile.runs.push_back(run_from_json(runs[r], where + ".runs[" + std::to_string(r) + "]"));
    with_context(where, [&] {
      profile.validate();
      return 0;
    });
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot replace " + path.string() + ": " + ec.message());
}

void save_profiles(const std::filesystem::path& path, const std::vector<DeviceProfile>& profiles) {
  write_file(path, profiles_to_json(profiles));
}

std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  try {
    return profiles_from_json(content);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string export_campaign_csv(const Campaign& campaign) {
  std::string out = "run,index,rtt_ms,outcome\n";
  for (const auto& s : campaign.samples) {
    out += std::to_string(s.run_index);
    out += ',';
    out += std::to_string(s.query_index);
    out += ',';
    if (s.outcome == Outcome::answered && s.rtt_ms) out += format_rtt(*s.rtt_ms);
    out += ',';
    out += to_string(s.outcome);
    out += '\n';
  }
  return out;
}

std::vector<Sample> import_campaign_csv(std::string_view text) {
  std::vector<Sample> samples;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "run,index,rtt_ms,outcome")
        throw ParseError("line 1: expected header run,index,rtt_ms,outcome");
      header_seen = true;
      continue;
    }
    auto cols = split(line, ',');
    if (cols.size() != 4)
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 columns, got " +
                       std::to_string(cols.size()));
    Sample s;
    s.run_index = parse_number<std::size_t>(cols[0], line_no, "run");
    s.query_index = parse_number<std::size_t>(cols[1], line_no, "index");
    try {
      s.outcome = parse_outcome(cols[3]);
    } catch (const ValidationError& e) {
      throw ParseError("line " + std::to_string(line_no) + ", column outcome: " + e.what());
    }
    if (!cols[2].empty()) s.rtt_ms = parse_number<double>(cols[2], line_no, "rtt_ms");
    if ((s.outcome == Outcome::answered) != s.rtt_ms.has_value())
      throw ParseError("line " + std::to_string(line_no) +
                       ": rtt_ms must be present exactly for answered rows");
    samples.push_back(s);
  }
  if (!header_seen) throw ParseError("campaign CSV is empty");
  return samples;
}

}  // namespace rootprobe::io
