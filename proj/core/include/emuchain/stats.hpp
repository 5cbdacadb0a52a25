#pragma once

#include <span>
#include <vector>

namespace emuchain {

double mean(std::span<const double> xs);

// Unbiased sample variance; zero for fewer than two values.
double sample_variance(std::span<const double> xs);

// Type-7 (linear interpolation) quantile of an unsorted sample, p in [0, 1].
double quantile(std::span<const double> xs, double p);
std::vector<double> quantiles(std::span<const double> xs, std::span<const double> ps);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

}  // namespace emuchain
