#pragma once

#include <span>
#include <vector>

namespace moods::stats {

double normal_cdf(double z);
double normal_quantile(double p);
/// Two-sided tail probability of a standard normal statistic.
double normal_two_sided_p(double z);
double student_t_two_sided_p(double t, double df);

double mean(std::span<const double> x);
/// Sample variance with `ddof` delta degrees of freedom.
double variance(std::span<const double> x, int ddof = 1);

/// Linear-interpolation quantile (Hyndman-Fan type 7) over ascending data.
double quantile_type7(std::span<const double> sorted, double p);
double median(std::vector<double> x);

/// 1-based ranks with ties given their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Sizes of tie groups (only groups of size > 1).
std::vector<std::size_t> tie_groups(std::span<const double> x);

}  // namespace moods::stats
