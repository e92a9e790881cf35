#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "moods/domain.hpp"
#include "moods/stats/distributions.hpp"
#include "moods/stats/its.hpp"
#include "moods/stats/lmm.hpp"
#include "moods/stats/nonparametric.hpp"
#include "moods/stats/resampling.hpp"
#include "moods/stats/trend.hpp"

using namespace moods;
using namespace moods::stats;

namespace {

// brute-force S over all pairs
double pairwise_s(const std::vector<double>& y) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = i + 1; j < y.size(); ++j) s += (y[j] > y[i]) - (y[j] < y[i]);
    return s;
}

double brute_median_slope(const std::vector<double>& y) {
    std::vector<double> sl;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = i + 1; j < y.size(); ++j) sl.push_back((y[j] - y[i]) / double(j - i));
    std::sort(sl.begin(), sl.end());
    const auto n = sl.size();
    return n % 2 ? sl[n / 2] : 0.5 * (sl[n / 2 - 1] + sl[n / 2]);
}

}  // namespace

TEST_CASE("distributions against scipy") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.001) == doctest::Approx(-3.090232306167813).epsilon(1e-12));
    CHECK(student_t_two_sided_p(2.1, 13) == doctest::Approx(0.055812604271257775).epsilon(1e-10));
    CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
}

TEST_CASE("quantile type 7 and average ranks") {
    std::vector<double> x{1, 2, 3, 4};
    CHECK(quantile_type7(x, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7(x, 0.1) == doctest::Approx(1.3));
    const std::vector<double> r = average_ranks(std::vector<double>{10, 20, 20, 5});
    CHECK(r == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("theil-sen worked example") {
    const auto f = theil_sen(std::vector<double>{0, 1, 5});
    CHECK(f.m == doctest::Approx(2.5));
    CHECK(f.b == doctest::Approx(-1.5));
}

TEST_CASE("mann-kendall agrees with brute force on random series") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 300; ++rep) {
        const int n = std::uniform_int_distribution<int>(3, 40)(rng);
        std::vector<double> y(n);
        // coarse values so ties show up
        for (auto& v : y) v = std::uniform_int_distribution<int>(0, 12)(rng) * 0.25;
        const auto r = mann_kendall(y);
        CHECK(r.s == pairwise_s(y));
        CHECK(r.m == doctest::Approx(brute_median_slope(y)).epsilon(1e-12));
        CHECK(r.n == static_cast<std::size_t>(n));
    }
}

TEST_CASE("mann-kendall variance with ties and continuity correction") {
    // y = 1 1 2 3 3 3: one tie group of 2, one of 3
    const std::vector<double> y{1, 1, 2, 3, 3, 3};
    const auto r = mann_kendall(y);
    const double var = (6.0 * 5 * 17 - (2.0 * 1 * 9) - (3.0 * 2 * 11)) / 18.0;
    CHECK(r.var_s == doctest::Approx(var));
    CHECK(r.s == 11);
    CHECK(r.z == doctest::Approx(10.0 / std::sqrt(var)));
    CHECK(r.p == doctest::Approx(normal_two_sided_p(10.0 / std::sqrt(var))));
    CHECK_THROWS_AS(mann_kendall(std::vector<double>{1, 2}), Error);
}

TEST_CASE("wilcoxon signed-rank matches scipy exact") {
    const std::vector<double> a{1.83, 0.50, 1.62, 2.48, 1.68, 1.88, 1.55, 3.06, 1.30};
    const std::vector<double> b{0.878, 0.647, 0.598, 2.05, 1.06, 1.29, 1.06, 3.14, 1.29};
    const auto r = wilcoxon_signed_rank(a, b);
    CHECK(r.exact);
    CHECK(r.statistic == doctest::Approx(40.0));
    CHECK(r.p == doctest::Approx(0.0390625).epsilon(1e-12));
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), Error);
}

TEST_CASE("mann-whitney matches scipy exact") {
    const std::vector<double> u1{1.1, 2.3, 0.7, 3.9, 2.2};
    const std::vector<double> u2{3.1, 4.5, 2.9, 5.0, 3.8, 4.2, 6.1};
    const auto r = mann_whitney_u(u1, u2);
    CHECK(r.exact);
    CHECK(r.statistic == doctest::Approx(3.0));
    CHECK(r.p == doctest::Approx(0.01767676767676768).epsilon(1e-12));
}

TEST_CASE("mann-whitney falls back to the normal approximation") {
    std::vector<double> a, b;
    for (int i = 0; i < 12; ++i) a.push_back(i);
    for (int i = 0; i < 10; ++i) b.push_back(i + 5.5);
    const auto r = mann_whitney_u(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.p > 0.0);
    CHECK(r.p < 1.0);
}

TEST_CASE("shapiro-wilk") {
    const auto r12 = shapiro_wilk({2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 4.9, 3.7, 3.0, 4.1, 2.5});
    CHECK(r12.w == doctest::Approx(0.9736969671074749).epsilon(1e-6));
    CHECK(r12.p == doctest::Approx(0.945419104291362).epsilon(1e-4));
    const auto skew = shapiro_wilk({0.5, 0.7, 0.8, 1.1, 1.3, 1.4, 1.9, 2.6, 3.8, 6.9, 12.0, 25.0});
    CHECK(skew.w == doctest::Approx(0.6474312055790286).epsilon(1e-6));
    CHECK(skew.p == doctest::Approx(0.000274804118674394).epsilon(1e-3));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0, 1);
    std::vector<double> x(50);
    for (auto& v : x) v = nd(rng);
    CHECK(shapiro_wilk(x).w > 0.95);

    std::vector<double> bimodal(25, 0.0);
    bimodal.insert(bimodal.end(), 25, 10.0);
    CHECK(shapiro_wilk(bimodal).p < 0.001);
    CHECK_THROWS_AS(shapiro_wilk({1.0, 2.0}), Error);
}

TEST_CASE("lmm against a statsmodels REML fit") {
    std::vector<LmmObservation> obs;
    for (int i = 0; i < 12; ++i) {
        for (int w = 0; w < 10; ++w) {
            const double y = 1.7 + 0.5 * std::sin(3 * i + 1) + (-0.03 + 0.04 * std::cos(5 * i + 2)) * w +
                             0.4 * std::sin(7 * i + 13 * w + 1);
            obs.push_back({"p" + std::to_string(i), double(w), y});
        }
    }
    const auto f = fit_lmm(obs);
    CHECK(f.converged);
    CHECK(f.intercept.estimate == doctest::Approx(1.79624784).epsilon(1e-5));
    CHECK(f.slope.estimate == doctest::Approx(-0.04699077).epsilon(1e-4));
    CHECK(f.intercept.se == doctest::Approx(0.12948012).epsilon(1e-3));
    CHECK(f.slope.se == doctest::Approx(0.02366009).epsilon(1e-3));
    CHECK(f.sd_intercept == doctest::Approx(0.43802036).epsilon(1e-3));
    CHECK(f.sd_slope == doctest::Approx(0.07994123).epsilon(1e-3));
    CHECK(f.corr == doctest::Approx(-0.743988121608173).epsilon(1e-3));
    CHECK(f.sd_residual == doctest::Approx(0.16424719949461017).epsilon(1e-3));
    CHECK(f.n_participants == 12);
    CHECK(f.n_obs == 120);
}

TEST_CASE("lmm with zero random effects is ordinary least squares") {
    std::vector<LmmObservation> obs;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0, 0.5);
    for (int i = 0; i < 20; ++i)
        for (int w = 0; w < 8; ++w) obs.push_back({"p" + std::to_string(i), double(w), 2.0 - 0.1 * w + nd(rng)});
    LmmOptions o;
    o.zero_random_effects = true;
    const auto f = fit_lmm(obs, o);
    // closed-form OLS
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : obs) sx += r.week, sy += r.y, sxx += r.week * r.week, sxy += r.week * r.y;
    const double n = double(obs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    CHECK(f.slope.estimate == doctest::Approx(slope).epsilon(1e-9));
    CHECK(f.intercept.estimate == doctest::Approx(icpt).epsilon(1e-9));
}

TEST_CASE("lmm participant filter") {
    std::vector<LmmObservation> obs{{"a", 0, 1}, {"a", 1, 1}, {"a", 2, 1}, {"a", 3, 1}, {"a", 4, 1},
                                    {"b", 0, 1}, {"b", 1, 2}, {"b", 2, 1}, {"c", 0, 1}, {"c", 1, 2},
                                    {"c", 2, 3}, {"c", 3, 1}, {"c", 4, 2}};
    const auto f = filter_lmm_participants(obs, 5);
    CHECK(f.dropped == std::vector<std::string>{"a", "b"});
    CHECK(f.kept.size() == 5);
}

TEST_CASE("its recovers an injected level change") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd(0, 1);
    std::vector<ItsParticipant> cohort;
    for (int p = 0; p < 40; ++p) {
        ItsParticipant ip{"p" + std::to_string(p), 6, {}};
        for (int d = 0; d < 98; ++d) {
            const int week = d / 7 + 1;
            ip.days.push_back({d, week, (week > 6 ? -0.5 : 0.0) + nd(rng)});
        }
        cohort.push_back(std::move(ip));
    }
    const auto r = interrupted_time_series(cohort);
    CHECK(r.n_participants == 40);
    CHECK(r.level_change < -0.2);
    CHECK(r.level_change_p < 0.05);
    CHECK(r.points.size() == 40);
}

TEST_CASE("zscore") {
    const auto z = zscore(std::vector<double>{1, 2, 3});
    CHECK(z.sd == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(z.values[0] == doctest::Approx(-1.0 / std::sqrt(2.0 / 3.0)));
    CHECK(zscore(std::vector<double>{4, 4}).degenerate);
}

TEST_CASE("retention curve") {
    const std::vector<int> last{0, 3, 3, 10};
    const auto c = retention_curve(last, 10);
    CHECK(c.at(0) == doctest::Approx(1.0));
    CHECK(c.at(1) == doctest::Approx(0.75));
    CHECK(c.at(4) == doctest::Approx(0.25));
    CHECK(c.step_days == std::vector<int>{1, 4});
}

TEST_CASE("bootstrap is reproducible and brackets the estimate") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
    CurveFit fit = [&](std::span<const std::size_t> u) {
        double s = 0;
        for (auto i : u) s += v[i];
        return std::vector<double>{s / double(u.size())};
    };
    const auto a = bootstrap_band(v.size(), fit, 400, 9);
    const auto b = bootstrap_band(v.size(), fit, 400, 9);
    CHECK(a.lower == b.lower);
    CHECK(a.lower[0] < 4.5);
    CHECK(a.upper[0] > 4.5);
    CHECK(a.estimate[0] == doctest::Approx(4.5));
}
