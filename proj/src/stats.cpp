#include "aqicast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aqicast/error.hpp"

namespace aqicast::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw DataError("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sum_squares(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss;
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt(sum_squares(x) / static_cast<double>(x.size() - 1));
}

double population_std(std::span<const double> x) {
  if (x.empty()) throw DataError("std of empty sample");
  return std::sqrt(sum_squares(x) / static_cast<double>(x.size()));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> x, double p) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

}  // namespace aqicast::stats
