#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace moods::stats {

struct RankTestResult {
    double statistic = 0.0;  // W+ for signed-rank, U of the first sample for Mann-Whitney
    double p = 1.0;          // two-sided
    double z = 0.0;          // normal approximation only
    bool exact = false;
    std::size_t n = 0;       // signed-rank: non-zero pairs; Mann-Whitney: n_a + n_b
};

inline constexpr std::size_t kWilcoxonExactMax = 25;
inline constexpr std::size_t kMannWhitneyExactMinSide = 8;

/// Wilcoxon signed-rank on paired samples. Zero differences are dropped and
/// tied magnitudes get average ranks. Exact null distribution (over all 2^n
/// sign assignments of the observed ranks) for n <= 25, otherwise normal
/// approximation with tie and continuity corrections.
RankTestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Mann-Whitney U. Exact permutation distribution of the observed (average)
/// ranks when min(n_a, n_b) <= 8, otherwise normal approximation with tie and
/// continuity corrections.
RankTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct ShapiroWilkResult {
    double w = 1.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// Royston's approximation, 3 <= n <= 5000.
ShapiroWilkResult shapiro_wilk(std::vector<double> y);

}  // namespace moods::stats
