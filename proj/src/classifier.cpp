#include "rootprobe/classifier.hpp"

#include <cmath>
#include <sstream>

#include "rootprobe/errors.hpp"

namespace rootprobe {
namespace {

DeviceProfile make_profile(std::string label, Configuration config,
                           std::initializer_list<std::pair<double, double>> runs) {
  DeviceProfile p;
  p.device_label = std::move(label);
  p.configuration = config;
  p.thermal_state = ThermalState::warm;
  for (auto [mean, sd] : runs) p.runs.push_back(stats::SummaryStats::from_moments(100, mean, sd));
  return p;
}

double share_of(double a, double b) {
  // a / (a + b) with infinities resolved to the limiting value.
  if (std::isinf(a) && std::isinf(b)) return 0.5;
  if (std::isinf(a)) return 1.0;
  if (std::isinf(b)) return 0.0;
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

std::string format_ms(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(Configuration c) {
  return c == Configuration::rooted ? "rooted" : "stock";
}

Configuration parse_configuration(std::string_view text) {
  if (text == "rooted") return Configuration::rooted;
  if (text == "stock") return Configuration::stock;
  throw ValidationError("unknown configuration: " + std::string(text));
}

std::string DeviceProfile::key() const {
  return device_label + "-" + std::string(to_string(configuration));
}

stats::SummaryStats DeviceProfile::pooled() const { return stats::pool(runs); }

void DeviceProfile::validate() const {
  if (device_label.empty()) throw ValidationError("profile has an empty device label");
  if (runs.empty()) throw ValidationError("profile " + key() + " has no runs");
  for (const auto& r : runs) {
    if (r.n < 1) throw ValidationError("profile " + key() + " has a run with n < 1");
    if (!(r.stddev >= 0.0)) throw ValidationError("profile " + key() + " has negative stddev");
  }
}

std::vector<DeviceProfile> builtin_profiles() {
  return {
      make_profile("S4", Configuration::rooted, {{258.01, 131.28}, {404.02, 520.37}, {318.38, 32.17}}),
      make_profile("S5", Configuration::rooted, {{16.13, 43.61}, {13.40, 38.99}, {14.47, 45.21}}),
      make_profile("S5", Configuration::stock, {{5.90, 1.64}, {6.15, 2.11}, {5.58, 0.86}}),
  };
}

const DeviceProfile* find_profile(std::span<const DeviceProfile> profiles, std::string_view key) {
  std::string normalized(key);
  for (auto& c : normalized)
    if (c == ' ') c = '-';
  for (const auto& p : profiles)
    if (p.key() == normalized) return &p;
  return nullptr;
}

std::string_view to_string(VerdictLabel label) {
  switch (label) {
    case VerdictLabel::rooted_leaning: return "rooted-leaning";
    case VerdictLabel::stock_leaning: return "stock-leaning";
    case VerdictLabel::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

VerdictLabel label_for_score(double score, double margin) {
  if (score >= 0.5 + margin) return VerdictLabel::rooted_leaning;
  if (score <= 0.5 - margin) return VerdictLabel::stock_leaning;
  return VerdictLabel::inconclusive;
}

TendencyVerdict classify(std::span<const stats::SummaryStats> observed_runs,
                         const DeviceProfile& rooted_ref, const DeviceProfile& stock_ref,
                         const ClassifierThresholds& thresholds, ThermalState observed_thermal) {
  if (observed_runs.empty()) throw EmptyInput("no observed runs to classify");
  rooted_ref.validate();
  stock_ref.validate();

  TendencyVerdict v;
  v.observed = stats::pool(observed_runs);
  if (v.observed.n == 0) throw EmptyInput("observation has no samples");
  const auto rooted = rooted_ref.pooled();
  const auto stock = stock_ref.pooled();

  v.distance_to_rooted = stats::z_distance(v.observed.mean - rooted.mean, rooted.stddev);
  v.distance_to_stock = stats::z_distance(v.observed.mean - stock.mean, stock.stddev);
  v.score = share_of(v.distance_to_stock, v.distance_to_rooted);
  v.label = label_for_score(v.score, thresholds.margin);

  if (v.observed.n >= 2) {
    if (rooted.n >= 2) v.versus_rooted = stats::welch_t(v.observed, rooted);
    if (stock.n >= 2) v.versus_stock = stats::welch_t(v.observed, stock);
  } else {
    v.warnings.push_back("single observed sample; Welch comparisons omitted");
  }

  v.reference_separation = stats::mean_ratio(rooted.mean, stock.mean);
  if (v.reference_separation < thresholds.separability) {
    v.label = VerdictLabel::inconclusive;
    v.warnings.push_back("inseparable references: " + rooted_ref.key() + " and " +
                         stock_ref.key() + " mean ratio " + format_ms(v.reference_separation) +
                         " is below " + format_ms(thresholds.separability));
  }

  for (const DeviceProfile* ref : {&rooted_ref, &stock_ref}) {
    if (ref->thermal_state != observed_thermal) {
      v.warnings.push_back("thermal state mismatch: observation is " +
                           std::string(to_string(observed_thermal)) + ", reference " + ref->key() +
                           " is " + std::string(to_string(ref->thermal_state)));
    }
  }
  return v;
}

TendencyVerdict classify_rtts(std::span<const std::vector<double>> observed_runs,
                              const DeviceProfile& rooted_ref, const DeviceProfile& stock_ref,
                              const ClassifierThresholds& thresholds,
                              ThermalState observed_thermal) {
  std::vector<stats::SummaryStats> runs;
  std::vector<double> all;
  for (const auto& r : observed_runs) {
    if (r.empty()) continue;
    runs.push_back(stats::summarize(r));
    all.insert(all.end(), r.begin(), r.end());
  }
  if (runs.empty()) throw EmptyInput("no answered samples to classify");
  auto v = classify(runs, rooted_ref, stock_ref, thresholds, observed_thermal);
  // With the raw samples at hand the pooled order statistics are exact.
  auto exact = stats::summarize(all);
  v.observed.min = exact.min;
  v.observed.max = exact.max;
  v.observed.median = exact.median;
  v.observed.p95 = exact.p95;
  return v;
}

}  // namespace rootprobe
