#include "moods/stats/trend.hpp"

#include <cmath>
#include <vector>

#include "moods/domain.hpp"
#include "moods/stats/distributions.hpp"

namespace moods::stats {

TheilSenFit theil_sen(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::Validation, "x and y differ in length");
    if (y.empty()) throw Error(ErrorCode::InsufficientData, "Theil-Sen needs at least one point");
    std::vector<double> slopes;
    slopes.reserve(y.size() * (y.size() - 1) / 2);
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = i + 1; j < y.size(); ++j) {
            if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
        }
    }
    TheilSenFit fit;
    fit.m = slopes.empty() ? 0.0 : median(std::move(slopes));
    fit.b = median({y.begin(), y.end()}) - fit.m * median({x.begin(), x.end()});
    return fit;
}

TheilSenFit theil_sen(std::span<const double> y) {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    return theil_sen(x, y);
}

TrendReport mann_kendall(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 3) throw Error(ErrorCode::InsufficientData, "Mann-Kendall needs at least 3 points");
    long long s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) s += (y[j] > y[i]) - (y[j] < y[i]);
    }
    const double nd = static_cast<double>(n);
    double var = nd * (nd - 1.0) * (2.0 * nd + 5.0);
    for (std::size_t t : tie_groups(y)) {
        const double td = static_cast<double>(t);
        var -= td * (td - 1.0) * (2.0 * td + 5.0);
    }
    var /= 18.0;

    TrendReport r;
    r.n = n;
    r.s = static_cast<double>(s);
    r.var_s = var;
    if (var > 0.0) {
        if (s > 0) r.z = (r.s - 1.0) / std::sqrt(var);
        else if (s < 0) r.z = (r.s + 1.0) / std::sqrt(var);
    }
    r.p = normal_two_sided_p(r.z);
    const auto ts = theil_sen(y);
    r.m = ts.m;
    r.b = ts.b;
    return r;
}

}  // namespace moods::stats
