#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace moods::stats {

/// Seed for the b-th resample; resamples are reproducible one by one.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Refits a population curve on a multiset of unit (participant) indices.
using CurveFit = std::function<std::vector<double>(std::span<const std::size_t> units)>;

struct BootstrapBand {
    std::vector<double> estimate;  // fit on the original units
    std::vector<double> lower;
    std::vector<double> upper;
    double lower_pct = 5.0;
    double upper_pct = 95.0;
    int resamples = 0;
    int failed = 0;  // resamples whose fit threw InsufficientData
};

/// Resamples units with replacement `b` times and takes pointwise type-7
/// percentiles of the refitted curves.
BootstrapBand bootstrap_band(std::size_t n_units, const CurveFit& fit, int b, std::uint64_t seed,
                             double lower_pct = 5.0, double upper_pct = 95.0);

struct RetentionCurve {
    std::vector<double> survival;   // survival[t] = share of participants active on day t, t = 0..horizon
    std::vector<int> step_days;     // distinct days on which survival drops
    std::size_t n = 0;

    double at(int day) const;
};

/// S(t) = #{last_active_day >= t} / N for t = 0..horizon. Days are 0-based
/// offsets from enrollment.
RetentionCurve retention_curve(std::span<const int> last_active_day, int horizon);

}  // namespace moods::stats
