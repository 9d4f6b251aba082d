#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rootprobe/classifier.hpp"
#include "rootprobe/prober.hpp"

namespace rootprobe::io {

inline constexpr int kProfileFormatVersion = 1;

/// Environment variable naming the default profile file used by the CLI.
inline constexpr const char* kProfilesEnvVar = "ROOTPROBE_PROFILES";

/// JSON document:
///   {"format_version": 1, "profiles": [{"device_label": "S5", "configuration": "rooted",
///     "thermal_state": "warm", "runs": [{"n": 100, "mean": 16.13, "stddev": 43.61,
///     "min": ..., "max": ..., "median": ..., "p95": ...}]}]}
/// The order statistics are optional.
std::string profiles_to_json(const std::vector<DeviceProfile>& profiles);

/// Throws ParseError (with line or field path) or VersionError; never returns a partial list.
std::vector<DeviceProfile> profiles_from_json(std::string_view text);

void save_profiles(const std::filesystem::path& path, const std::vector<DeviceProfile>& profiles);
std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path);

/// "run,index,rtt_ms,outcome" header then one LF-terminated row per sample; rtt with three
/// decimals, empty when not answered.
std::string export_campaign_csv(const Campaign& campaign);

/// Reads a CSV written by export_campaign_csv back into samples.
std::vector<Sample> import_campaign_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace rootprobe::io
