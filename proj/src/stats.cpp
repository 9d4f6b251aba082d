#include "rootprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rootprobe/errors.hpp"

namespace rootprobe::stats {

SummaryStats SummaryStats::from_moments(std::size_t n, double mean, double stddev) {
  SummaryStats s;
  s.n = n;
  s.mean = mean;
  s.stddev = stddev;
  return s;
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyInput("percentile of empty sample");
  double h = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SummaryStats summarize(std::span<const double> rtts) {
  if (rtts.empty()) throw EmptyInput("cannot summarize an empty rtt list");

  // Welford's update keeps the variance accurate for long, tightly clustered runs.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : rtts) {
    ++k;
    double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }

  std::vector<double> sorted(rtts.begin(), rtts.end());
  std::sort(sorted.begin(), sorted.end());

  SummaryStats s;
  s.n = rtts.size();
  s.mean = mean;
  s.stddev = s.n > 1 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(s.n - 1))) : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = percentile_sorted(sorted, 0.5);
  s.p95 = percentile_sorted(sorted, 0.95);
  return s;
}

SummaryStats pool(std::span<const SummaryStats> runs) {
  if (runs.empty()) throw EmptyInput("no runs to pool");
  if (runs.size() == 1) return runs.front();

  std::size_t n = 0;
  double weighted_sum = 0.0;
  for (const auto& r : runs) {
    if (r.n == 0) throw EmptyInput("cannot pool a run with n = 0");
    n += r.n;
    weighted_sum += static_cast<double>(r.n) * r.mean;
  }
  double mean = weighted_sum / static_cast<double>(n);

  // Total sum of squares = within-run + between-run.
  double ss = 0.0;
  for (const auto& r : runs) {
    double d = r.mean - mean;
    ss += static_cast<double>(r.n - 1) * r.variance() + static_cast<double>(r.n) * d * d;
  }

  SummaryStats s;
  s.n = n;
  s.mean = mean;
  s.stddev = n > 1 ? std::sqrt(std::max(0.0, ss / static_cast<double>(n - 1))) : 0.0;
  bool have_extrema = std::all_of(runs.begin(), runs.end(),
                                  [](const SummaryStats& r) { return r.min && r.max; });
  if (have_extrema) {
    for (const auto& r : runs) {
      s.min = s.min ? std::min(*s.min, *r.min) : *r.min;
      s.max = s.max ? std::max(*s.max, *r.max) : *r.max;
    }
  }
  return s;
}

double mean_ratio(double mean_a, double mean_b) {
  double hi = std::max(mean_a, mean_b);
  double lo = std::min(mean_a, mean_b);
  if (hi == lo) return 1.0;
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double z_distance(double difference, double stddev) {
  double d = std::fabs(difference);
  if (stddev > 0.0) return d / stddev;
  return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

ComparisonResult welch_t(const SummaryStats& a, const SummaryStats& b) {
  if (a.n < 2 || b.n < 2)
    throw InsufficientSamples("welch_t needs at least two samples on each side");

  double na = static_cast<double>(a.n);
  double nb = static_cast<double>(b.n);
  double va = a.variance() / na;
  double vb = b.variance() / nb;
  double diff = a.mean - b.mean;

  ComparisonResult r;
  double se = std::sqrt(va + vb);
  if (se > 0.0) {
    r.t_statistic = diff / se;
    r.degrees_of_freedom = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  } else {
    // Both variances vanish: the statistic is unbounded unless the means coincide.
    r.t_statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.degrees_of_freedom = na + nb - 2.0;
  }
  r.mean_ratio = mean_ratio(a.mean, b.mean);
  r.z_distance_a = z_distance(diff, a.stddev);
  r.z_distance_b = z_distance(diff, b.stddev);
  return r;
}

}  // namespace rootprobe::stats
