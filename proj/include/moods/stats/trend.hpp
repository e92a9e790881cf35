#pragma once

#include <cstddef>
#include <span>

namespace moods::stats {

struct TheilSenFit {
    double m = 0.0;  // median pairwise slope
    double b = 0.0;  // median(y) - m * median(x)
};

/// Theil-Sen over evenly spaced x = 0..n-1.
TheilSenFit theil_sen(std::span<const double> y);
/// Theil-Sen over arbitrary x; pairs with equal x are skipped.
TheilSenFit theil_sen(std::span<const double> x, std::span<const double> y);

struct TrendReport {
    double m = 0.0;
    double b = 0.0;
    double s = 0.0;
    double var_s = 0.0;
    double z = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// Mann-Kendall test with tie-corrected variance and a continuity correction
/// of 1 on S; slope and intercept come from theil_sen(). Throws
/// InsufficientData for n < 3.
TrendReport mann_kendall(std::span<const double> y);

}  // namespace moods::stats
