#include "moods/stats/nonparametric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>

#include "moods/domain.hpp"
#include "moods/stats/distributions.hpp"

namespace moods::stats {

namespace {

// Average ranks are multiples of 1/2; doubling makes them integers.
std::vector<int> doubled(const std::vector<double>& ranks) {
    std::vector<int> out(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) out[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
    return out;
}

double two_sided_from_tails(double lower, double upper) { return std::min(1.0, 2.0 * std::min(lower, upper)); }

}  // namespace

RankTestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::Validation, "paired samples differ in length");
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) diff.push_back(a[i] - b[i]);
    }
    if (diff.empty()) throw Error(ErrorCode::InsufficientData, "all paired differences are zero");
    const std::size_t n = diff.size();
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(diff[i]);
    const auto ranks = average_ranks(mag);

    RankTestResult r;
    r.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (diff[i] > 0) r.statistic += ranks[i];
    }

    if (n <= kWilcoxonExactMax) {
        const auto d = doubled(ranks);
        const int total = std::accumulate(d.begin(), d.end(), 0);
        // count[s] = number of sign assignments whose positive doubled ranks sum to s
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        int reach = 0;
        for (int w : d) {
            for (int s = reach; s >= 0; --s) {
                if (count[s] != 0.0) count[s + w] += count[s];
            }
            reach += w;
        }
        const int obs = static_cast<int>(std::lround(2.0 * r.statistic));
        double lower = 0.0, upper = 0.0;
        for (int s = 0; s <= total; ++s) {
            if (s <= obs) lower += count[s];
            if (s >= obs) upper += count[s];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        r.p = two_sided_from_tails(lower / all, upper / all);
        r.exact = true;
        return r;
    }

    const double nd = static_cast<double>(n);
    const double mu = nd * (nd + 1.0) / 4.0;
    double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
    for (std::size_t t : tie_groups(mag)) {
        const double td = static_cast<double>(t);
        var -= (td * td * td - td) / 48.0;
    }
    const double dev = r.statistic - mu;
    const double cc = dev > 0 ? 0.5 : (dev < 0 ? -0.5 : 0.0);
    r.z = var > 0 ? (dev - cc) / std::sqrt(var) : 0.0;
    r.p = normal_two_sided_p(r.z);
    return r;
}

RankTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::InsufficientData, "Mann-Whitney needs two non-empty samples");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);
    double ra = 0.0;
    for (std::size_t i = 0; i < na; ++i) ra += ranks[i];
    const double nad = static_cast<double>(na), nbd = static_cast<double>(nb);

    RankTestResult r;
    r.n = n;
    r.statistic = ra - nad * (nad + 1.0) / 2.0;

    if (std::min(na, nb) <= kMannWhitneyExactMinSide) {
        // Distribution of the doubled rank sum of a k-subset, k = smaller side.
        const bool a_small = na <= nb;
        const std::size_t k = a_small ? na : nb;
        const auto d = doubled(ranks);
        std::vector<int> desc(d);
        std::sort(desc.begin(), desc.end(), std::greater<>());
        const int total = std::accumulate(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(k), 0);
        std::vector<std::vector<double>> ways(k + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
        ways[0][0] = 1.0;
        int reach = 0;
        for (std::size_t item = 0; item < n; ++item) {
            const int w = d[item];
            for (std::size_t j = std::min(k, item + 1); j >= 1; --j) {
                auto& to = ways[j];
                const auto& from = ways[j - 1];
                for (int s = std::min(reach, total - w); s >= 0; --s) {
                    if (from[s] != 0.0) to[s + w] += from[s];
                }
            }
            reach += w;
        }
        int obs = 0;
        if (a_small) {
            for (std::size_t i = 0; i < na; ++i) obs += d[i];
        } else {
            for (std::size_t i = na; i < n; ++i) obs += d[i];
        }
        double lower = 0.0, upper = 0.0, all = 0.0;
        for (int s = 0; s <= total; ++s) {
            const double c = ways[k][s];
            all += c;
            if (s <= obs) lower += c;
            if (s >= obs) upper += c;
        }
        r.p = two_sided_from_tails(lower / all, upper / all);
        r.exact = true;
        return r;
    }

    const double nn = static_cast<double>(n);
    double tie_term = 0.0;
    for (std::size_t t : tie_groups(pooled)) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double var = nad * nbd / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    const double dev = r.statistic - nad * nbd / 2.0;
    const double cc = dev > 0 ? 0.5 : (dev < 0 ? -0.5 : 0.0);
    r.z = var > 0 ? (dev - cc) / std::sqrt(var) : 0.0;
    r.p = normal_two_sided_p(r.z);
    return r;
}

namespace {

double poly(const double* c, int nord, double x) {
    double ret = c[0];
    if (nord > 1) {
        double p = x * c[nord - 1];
        for (int j = nord - 2; j > 0; --j) p = (p + c[j]) * x;
        ret += p;
    }
    return ret;
}

}  // namespace

ShapiroWilkResult shapiro_wilk(std::vector<double> y) {
    const std::size_t n = y.size();
    if (n < 3) throw Error(ErrorCode::InsufficientData, "Shapiro-Wilk needs at least 3 observations");
    if (n > 5000) throw Error(ErrorCode::Validation, "Shapiro-Wilk approximation is valid up to n = 5000");
    std::sort(y.begin(), y.end());
    if (y.back() - y.front() <= 0.0) throw Error(ErrorCode::InsufficientData, "Shapiro-Wilk on constant data");

    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    static constexpr double g[] = {-2.273, 0.459};

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
        std::size_t first;
        double fac;
        if (n > 5) {
            first = 2;
            const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            first = 1;
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
    }

    const double mu = mean(y);
    double ss = 0.0;
    for (double v : y) ss += (v - mu) * (v - mu);
    double num = 0.0;
    for (std::size_t i = 0; i < half; ++i) num += a[i] * (y[n - 1 - i] - y[i]);

    ShapiroWilkResult r;
    r.n = n;
    r.w = std::min(1.0, num * num / ss);

    if (n == 3) {
        constexpr double pi6 = 1.90985931710274;  // 6/pi
        constexpr double stqr = 1.04719755119660; // pi/3
        r.p = std::max(0.0, pi6 * (std::asin(std::sqrt(r.w)) - stqr));
        return r;
    }
    double yv = std::log(1.0 - r.w);
    double mean_, sd;
    if (n <= 11) {
        const double gamma = poly(g, 2, an);
        if (yv >= gamma) {
            r.p = 1e-99;
            return r;
        }
        yv = -std::log(gamma - yv);
        mean_ = poly(c3, 4, an);
        sd = std::exp(poly(c4, 4, an));
    } else {
        const double xx = std::log(an);
        mean_ = poly(c5, 4, xx);
        sd = std::exp(poly(c6, 3, xx));
    }
    r.p = 0.5 * std::erfc((yv - mean_) / sd / std::sqrt(2.0));
    return r;
}

}  // namespace moods::stats
