#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace rootprobe::stats {

/// Descriptive statistics of round-trip times, all in milliseconds.
///
/// `stddev` uses the n-1 denominator and is 0 for n == 1. The order statistics are
/// optional: summaries reconstructed from published moments (mean, stddev) or pooled
/// from several runs do not have them.
struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> median;
  std::optional<double> p95;

  /// Summary known only by its first two moments.
  static SummaryStats from_moments(std::size_t n, double mean, double stddev);

  double variance() const { return stddev * stddev; }

  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

struct ComparisonResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double mean_ratio = 1.0;
  /// |mean_a - mean_b| in units of a's (resp. b's) stddev; +infinity when that stddev is
  /// zero and the means differ.
  double z_distance_a = 0.0;
  double z_distance_b = 0.0;
};

/// Throws EmptyInput for an empty list.
SummaryStats summarize(std::span<const double> rtts);

/// Percentile by linear interpolation between closest ranks, q in [0, 1].
/// `sorted` must be ascending and non-empty.
double percentile_sorted(std::span<const double> sorted, double q);

/// Combines runs as if their samples had been concatenated. Moments and min/max are
/// exact; median and p95 are kept only when a single run is pooled.
SummaryStats pool(std::span<const SummaryStats> runs);

/// Welch's unequal-variance t statistic with Welch-Satterthwaite degrees of freedom.
/// Throws InsufficientSamples when either side has n < 2.
ComparisonResult welch_t(const SummaryStats& a, const SummaryStats& b);

/// max(mean)/min(mean); 1 for two zero means, +infinity when only the smaller is <= 0.
double mean_ratio(double mean_a, double mean_b);

/// |difference| / stddev, with 0/0 = 0 and x/0 = +infinity.
double z_distance(double difference, double stddev);

}  // namespace rootprobe::stats
