#pragma once

#include <span>
#include <vector>

namespace aqicast::stats {

double mean(std::span<const double> x);

/// Sum of squared deviations about the mean.
double sum_squares(std::span<const double> x);

/// Standard deviation with n-1 denominator; 0 for fewer than two values.
double sample_std(std::span<const double> x);

/// Standard deviation with n denominator.
double population_std(std::span<const double> x);

/// Quantile of an ascending-sorted sample by linear interpolation at
/// h = (n - 1) p + 1 (1-based position), i.e. numpy's default "linear".
double quantile_sorted(std::span<const double> sorted, double p);

/// Copies, sorts and evaluates quantile_sorted.
double quantile(std::span<const double> x, double p);

}  // namespace aqicast::stats
