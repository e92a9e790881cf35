#pragma once

// Conservation checks over one dataset. Each returns an empty string when the
// invariant holds, otherwise what went wrong.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "moods/vizkit.hpp"

namespace moods::testing {

inline double points_sum(const viz::ChartSpec& c, const char* detail_key = nullptr) {
    double s = 0.0;
    for (const auto& series : c.series) {
        if (series.name != c.series.front().name) continue;
        for (const auto& p : series.points) s += detail_key ? p.detail.at(detail_key).get<double>() : p.value;
    }
    return s;
}

inline std::string check_prevalence_sums(const viz::VizView& v) {
    const auto prev = viz::build_stressor_prevalence(v);
    const auto loc = viz::build_location_prominence(v);
    for (const auto* c : {&prev, &loc}) {
        const double total = c->meta.at("total_stressed_duration_min").get<double>();
        const double pct = points_sum(*c);
        if (total > 0 && std::abs(pct - 100.0) > 0.1) return c->chart_id + " percentages sum to " + std::to_string(pct);
        if (total <= 0 && !c->series.front().points.empty()) return c->chart_id + " has points without stressed time";
    }
    return {};
}

inline std::string check_duration_conserved(const viz::VizView& v) {
    const auto prev = viz::build_stressor_prevalence(v);
    const auto loc = viz::build_location_prominence(v);
    const auto ctx = viz::build_prominent_stressor_context(v);
    const double t_prev = prev.meta.at("total_stressed_duration_min").get<double>();
    const double t_loc = loc.meta.at("total_stressed_duration_min").get<double>();
    const double t_ctx = ctx.meta.at("total_stressed_duration_min").get<double>();
    if (t_prev != t_loc || t_prev != t_ctx) return "chart totals differ";
    double direct = 0.0;
    for (const auto& r : v.records) {
        if (r.stressed) direct += r.duration_min;
    }
    const double tol = 1e-6 * (1.0 + static_cast<double>(v.records.size()));
    if (std::abs(direct - t_prev) > tol) return "total differs from the records";
    if (std::abs(points_sum(prev, "duration_min") - t_prev) > tol) return "stressor durations do not add up";
    if (std::abs(points_sum(loc, "duration_min") - t_loc) > tol) return "location durations do not add up";
    const double ring = points_sum(ctx) + ctx.meta.at("other_duration_min").get<double>();
    if (std::abs(ring - t_ctx) > tol) return "context ring plus other does not add up";
    return {};
}

/// Flips one visible annotation to private and checks that exactly its
/// contribution disappears.
inline std::string check_private_flip(viz::VizDataset d, int week, std::mt19937_64& rng) {
    const auto before = viz::make_view(d, week);
    if (before.records.empty()) return {};
    const auto& pick = before.records[std::uniform_int_distribution<std::size_t>(0, before.records.size() - 1)(rng)];
    const EventId id = pick.event->event_id;
    const double dur = pick.stressed ? pick.duration_min : 0.0;
    const std::string stressor = pick.stressor;
    const bool had_map_point = !pick.stressor.empty() && (pick.annotation->gps || pick.event->location);

    const auto prev_before = viz::build_stressor_prevalence(before);
    const auto map_before = viz::build_map_view(before);
    const double total_before = prev_before.meta.at("total_stressed_duration_min").get<double>();
    std::size_t map_points_before = 0;
    for (const auto& s : map_before.series) map_points_before += s.points.size();

    for (auto& a : d.annotations) {
        if (a.event_id == id) a.is_private = true;
    }
    const auto after = viz::make_view(d, week);
    for (const auto* e : after.events) {
        if (e->event_id == id) return "private event still visible";
    }
    for (const auto& r : after.records) {
        if (r.event->event_id == id) return "private annotation still visible";
    }
    if (after.records.size() + 1 != before.records.size()) return "other records changed";
    const auto prev_after = viz::build_stressor_prevalence(after);
    const double total_after = prev_after.meta.at("total_stressed_duration_min").get<double>();
    if (std::abs(total_before - dur - total_after) > 1e-5) return "total did not drop by the event's duration";
    if (dur > 0 && !(total_after < total_before)) return "total did not strictly decrease";
    auto dur_of = [&](const viz::ChartSpec& c) {
        for (const auto& p : c.series.front().points) {
            if (p.detail.value("full_text", p.label) == stressor) return p.detail.at("duration_min").get<double>();
        }
        return 0.0;
    };
    if (dur > 0 && std::abs(dur_of(prev_before) - dur - dur_of(prev_after)) > 1e-5) return "stressor share kept the event";
    std::size_t map_points_after = 0;
    for (const auto& s : viz::build_map_view(after).series) map_points_after += s.points.size();
    if (map_points_after + (had_map_point ? 1 : 0) != map_points_before) return "map point count wrong";
    return {};
}

inline std::string check_bundle_schedule(const viz::VizDataset& d) {
    std::set<std::string> prev;
    for (int w = 1; w <= 15; ++w) {
        const auto b = viz::assemble_bundle(d, w);
        std::set<std::string> ids;
        for (const auto& c : b.charts) ids.insert(c.chart_id);
        if (ids.size() != b.charts.size()) return "duplicate chart in week " + std::to_string(w);
        if (!std::includes(ids.begin(), ids.end(), prev.begin(), prev.end())) {
            return "bundle " + std::to_string(w - 1) + " not contained in bundle " + std::to_string(w);
        }
        if (w == 1 && ids.size() != 2) return "week 1 bundle has " + std::to_string(ids.size()) + " charts";
        if (w == 14 && ids.size() != 16) return "week 14 bundle has " + std::to_string(ids.size()) + " charts";
        prev = std::move(ids);
    }
    return {};
}

}  // namespace moods::testing
