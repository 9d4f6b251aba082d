#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rootprobe/prober.hpp"
#include "rootprobe/stats.hpp"

namespace rootprobe {

enum class Configuration { rooted, stock };

std::string_view to_string(Configuration c);
Configuration parse_configuration(std::string_view text);

/// Reference latency distribution of one device in one configuration.
struct DeviceProfile {
  std::string device_label;
  Configuration configuration = Configuration::stock;
  ThermalState thermal_state = ThermalState::unknown;
  std::vector<stats::SummaryStats> runs;

  /// Lookup key, e.g. "S5-rooted".
  std::string key() const;
  stats::SummaryStats pooled() const;
  void validate() const;

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

/// The three measured reference devices: S4 rooted, S5 rooted, S5 stock, three runs of
/// 100 queries each, recorded on warm devices.
std::vector<DeviceProfile> builtin_profiles();

/// Finds a profile by key ("S5-rooted"); "S5 rooted" is accepted as well.
const DeviceProfile* find_profile(std::span<const DeviceProfile> profiles, std::string_view key);

struct ClassifierThresholds {
  /// Half-width of the inconclusive band around 0.5.
  double margin = 0.15;
  /// Reference pairs whose pooled mean ratio is below this are treated as inseparable.
  double separability = 1.5;
};

enum class VerdictLabel { rooted_leaning, stock_leaning, inconclusive };

std::string_view to_string(VerdictLabel label);

/// Graded outcome; there is deliberately no boolean "is rooted" field.
struct TendencyVerdict {
  /// 1 leans towards the rooted reference, 0 towards the stock reference.
  double score = 0.5;
  VerdictLabel label = VerdictLabel::inconclusive;
  stats::SummaryStats observed;
  double distance_to_rooted = 0.0;
  double distance_to_stock = 0.0;
  /// Welch comparison of the pooled observation against each reference; absent when the
  /// observation has a single sample.
  std::optional<stats::ComparisonResult> versus_rooted;
  std::optional<stats::ComparisonResult> versus_stock;
  /// Mean ratio between the two references.
  double reference_separation = 1.0;
  std::vector<std::string> warnings;
};

/// Classifies per-run summaries of an observation against a rooted and a stock reference.
/// Throws EmptyInput when `observed_runs` is empty.
TendencyVerdict classify(std::span<const stats::SummaryStats> observed_runs,
                         const DeviceProfile& rooted_ref, const DeviceProfile& stock_ref,
                         const ClassifierThresholds& thresholds = {},
                         ThermalState observed_thermal = ThermalState::unknown);

/// Same, from raw per-run rtts (empty runs are skipped).
TendencyVerdict classify_rtts(std::span<const std::vector<double>> observed_runs,
                              const DeviceProfile& rooted_ref, const DeviceProfile& stock_ref,
                              const ClassifierThresholds& thresholds = {},
                              ThermalState observed_thermal = ThermalState::unknown);

/// Label for a score under the given margin.
VerdictLabel label_for_score(double score, double margin);

}  // namespace rootprobe
