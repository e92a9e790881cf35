#include <doctest.h>

#include <random>

#include "../support/its_scenario.hpp"
#include "moods/analysis.hpp"
#include "moods/simulator.hpp"

using namespace moods;
using namespace moods::analysis;

namespace {

// The calibrated default cohort, simulated once.
const StudyData& cohort() {
    static const StudyData d = from_dataset(sim::simulate(sim::SimConfig{}));
    return d;
}

}  // namespace

TEST_CASE("retention of 110 out of 136 at day 30") {
    std::vector<int> last(136, 10);
    for (int i = 0; i < 110; ++i) last[i] = 30 + i % 60;
    const auto c = stats::retention_curve(last, 97);
    CHECK(c.at(30) == doctest::Approx(110.0 / 136.0));
    CHECK(std::round(c.at(30) * 100) == 81);
    CHECK(c.at(11) == doctest::Approx(110.0 / 136.0));
    CHECK(c.at(10) == doctest::Approx(1.0));
}

TEST_CASE("weekly aggregation and cohort means") {
    std::vector<ParticipantWeek> pw{{"a", 1, 6, 3}, {"b", 1, 1, 1}, {"a", 2, 2, 2}};
    const auto m = cohort_weekly_means(pw, Weighting::ParticipantMean);
    CHECK(m.weeks == std::vector<int>{1, 2});
    CHECK(m.means[0] == doctest::Approx(1.5));
    const auto p = cohort_weekly_means(pw, Weighting::Pooled);
    CHECK(p.means[0] == doctest::Approx(7.0 / 4.0));
    CHECK(m.participants == std::vector<int>{2, 1});
}

TEST_CASE("percentile bootstrap covers the mean about 90% of the time") {
    std::mt19937_64 rng(90);
    std::normal_distribution<double> nd(3.0, 1.0);
    int covered = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x(40);
        for (auto& v : x) v = nd(rng);
        stats::CurveFit fit = [&](std::span<const std::size_t> units) {
            double s = 0;
            for (auto u : units) s += x[u];
            return std::vector<double>{s / double(units.size())};
        };
        const auto band = stats::bootstrap_band(x.size(), fit, 300, 1000 + t);
        covered += band.lower[0] <= 3.0 && 3.0 <= band.upper[0];
    }
    const double pct = 100.0 * covered / trials;
    CHECK(pct > 85.0);
    CHECK(pct < 95.0);
}

TEST_CASE("its without an action effect finds no level change") {
    double sum = 0;
    for (std::uint64_t k = 1; k <= 100; ++k) {
        const auto r = testing::run_its_scenario(k, 0.0).report;
        CHECK(r.n_participants == 17);
        sum += r.level_change;
    }
    CHECK(std::abs(sum / 100) < 0.05);
}

TEST_CASE("group comparison gates on normality and stays nonparametric") {
    std::vector<double> a{1.1, 2.3, 1.9, 2.8, 3.2, 2.2, 1.7, 2.5};
    std::vector<double> b{3.1, 4.2, 3.9, 4.8, 3.3, 4.4, 5.0, 3.6};
    const auto g = compare_groups(a, b, "x", "y");
    CHECK(g.label_a == "x");
    CHECK(g.test.exact);
    CHECK(g.test.p < 0.01);
    CHECK(g.normality_a.n == 8);
}

TEST_CASE("calibrated cohort: field rates and retention") {
    const auto& d = cohort();
    const auto r = field_rates(d);
    CHECK(r.response_rate == doctest::Approx(0.74).epsilon(0.05));
    CHECK(r.responses_per_day == doctest::Approx(3.86).epsilon(0.1));
    CHECK(r.top_stressors.front().first == "work");
    CHECK(retention(d).at(30) == doctest::Approx(0.81).epsilon(0.08));
}

TEST_CASE("calibrated cohort: baseline weeks 1 and 4") {
    const auto c = week_comparison(weekly_intensity(cohort()), 1, 4);
    CHECK(c.mean_a == doctest::Approx(1.81).epsilon(0.08));
    CHECK(c.mean_b == doctest::Approx(1.57).epsilon(0.08));
    CHECK(c.mean_a > c.mean_b);
    CHECK(c.test.p < 0.05);
}

TEST_CASE("calibrated cohort: stressor entry time learning curve") {
    const auto e = entry_time_trend(cohort());
    CHECK(e.trend.m == doctest::Approx(-0.58).epsilon(0.2));
    CHECK(e.trend.b == doctest::Approx(50.46).epsilon(0.2));
    CHECK(e.trend.p < 0.05);
}

TEST_CASE("calibrated cohort: lmm on weekly intensity") {
    const auto l = lmm_analysis(weekly_intensity(cohort()));
    CHECK(l.fit.converged);
    CHECK(l.fit.slope.estimate < 0);
    CHECK(l.fit.sd_intercept > 0);
    CHECK(l.filter.kept.size() > 0);
}

TEST_CASE("report documents carry the schema") {
    ReportOptions o;
    o.bootstrap_resamples = 20;
    const auto t = trends_report(cohort(), o);
    CHECK(t["schema"] == std::string(kReportSchema));
    CHECK(t["intensity"]["all_weeks"]["trend"]["m"].get<double>() < 0);
    CHECK(t["intensity"]["bootstrap"]["lower"].size() == 14);
}
