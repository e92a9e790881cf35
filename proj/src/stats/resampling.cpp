#include "moods/stats/resampling.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "moods/domain.hpp"
#include "moods/stats/distributions.hpp"

namespace moods::stats {

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t x = seed ^ (stream * 0x9e3779b97f4a7c15ULL);
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

BootstrapBand bootstrap_band(std::size_t n_units, const CurveFit& fit, int b, std::uint64_t seed,
                             double lower_pct, double upper_pct) {
    if (n_units == 0) throw Error(ErrorCode::InsufficientData, "bootstrap needs at least one unit");
    if (b < 1) throw Error(ErrorCode::Validation, "bootstrap needs at least one resample");
    if (!(0.0 <= lower_pct && lower_pct <= upper_pct && upper_pct <= 100.0)) {
        throw Error(ErrorCode::Validation, "bootstrap percentiles must satisfy 0 <= lower <= upper <= 100");
    }
    BootstrapBand band;
    band.lower_pct = lower_pct;
    band.upper_pct = upper_pct;
    std::vector<std::size_t> all(n_units);
    for (std::size_t i = 0; i < n_units; ++i) all[i] = i;
    band.estimate = fit(all);
    const std::size_t width = band.estimate.size();

    std::vector<std::vector<double>> columns(width);
    std::vector<std::size_t> units(n_units);
    for (int r = 0; r < b; ++r) {
        std::mt19937_64 rng(substream_seed(seed, static_cast<std::uint64_t>(r)));
        std::uniform_int_distribution<std::size_t> pick(0, n_units - 1);
        for (auto& u : units) u = pick(rng);
        std::sort(units.begin(), units.end());
        std::vector<double> curve;
        try {
            curve = fit(units);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientData) throw;
            ++band.failed;
            continue;
        }
        if (curve.size() != width) throw Error(ErrorCode::Validation, "bootstrap fit changed curve length");
        for (std::size_t i = 0; i < width; ++i) columns[i].push_back(curve[i]);
        ++band.resamples;
    }
    if (band.resamples == 0) throw Error(ErrorCode::InsufficientData, "every bootstrap resample failed");
    for (auto& col : columns) {
        std::sort(col.begin(), col.end());
        band.lower.push_back(quantile_type7(col, lower_pct / 100.0));
        band.upper.push_back(quantile_type7(col, upper_pct / 100.0));
    }
    return band;
}

double RetentionCurve::at(int day) const {
    if (survival.empty()) return 0.0;
    if (day < 0) return 1.0;
    return survival[std::min<std::size_t>(static_cast<std::size_t>(day), survival.size() - 1)];
}

RetentionCurve retention_curve(std::span<const int> last_active_day, int horizon) {
    if (last_active_day.empty()) throw Error(ErrorCode::InsufficientData, "retention needs participants");
    if (horizon < 0) throw Error(ErrorCode::Validation, "horizon must be >= 0");
    RetentionCurve c;
    c.n = last_active_day.size();
    c.survival.resize(static_cast<std::size_t>(horizon) + 1);
    for (int t = 0; t <= horizon; ++t) {
        const auto alive = std::count_if(last_active_day.begin(), last_active_day.end(), [t](int d) { return d >= t; });
        c.survival[static_cast<std::size_t>(t)] = static_cast<double>(alive) / static_cast<double>(c.n);
    }
    std::set<int> steps;
    for (int d : last_active_day) {
        if (d >= 0 && d + 1 <= horizon) steps.insert(d + 1);
    }
    c.step_days.assign(steps.begin(), steps.end());
    return c;
}

}  // namespace moods::stats
