#include "moods/vizkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "moods/stats/distributions.hpp"

namespace moods::viz {

namespace {

constexpr int kTopContext = 5;
constexpr int kTopFrequency = 10;
constexpr std::string_view kCategorical = "okabe-ito";
constexpr std::string_view kSequential = "viridis";

// Rounded copy for serialization; keeps documents free of last-bit noise.
double r6(double v) { return std::round(v * 1e6) / 1e6; }

ChartSpec blank(const VizView& v, std::string_view id, std::string title, std::string type) {
    ChartSpec c;
    c.chart_id = std::string(id);
    c.title = std::move(title);
    c.chart_type = std::move(type);
    c.week_index = v.week_index;
    c.participant_id = v.data->participant_id;
    c.color_scale = {{"palette", kCategorical}, {"type", "categorical"}};
    return c;
}

ChartPoint labelled(const std::string& full, double value) {
    ChartPoint p;
    p.label = abbreviate(full);
    p.value = r6(value);
    p.detail["full_text"] = full;
    return p;
}

struct Tally {
    double duration = 0.0;
    std::size_t count = 0;
};

/// Keys ordered by metric descending, then key ascending; at most `limit` (0 = all).
template <typename Metric>
std::vector<std::string> ranked(const std::map<std::string, Tally>& m, Metric metric, std::size_t limit = 0) {
    std::vector<std::pair<double, std::string>> v;
    for (const auto& [k, t] : m) v.emplace_back(metric(t), k);
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (const auto& [val, k] : v) {
        if (limit && out.size() >= limit) break;
        out.push_back(k);
    }
    return out;
}

double by_duration(const Tally& t) { return t.duration; }
double by_count(const Tally& t) { return static_cast<double>(t.count); }

std::map<std::string, Tally> tally(const VizView& v, bool stressed_only,
                                   const std::function<std::string(const VizRecord&)>& key) {
    std::map<std::string, Tally> out;
    for (const auto& r : v.records) {
        if (r.stressor.empty() || (stressed_only && !r.stressed)) continue;
        auto& t = out[key(r)];
        t.duration += r.duration_min;
        t.count += 1;
    }
    return out;
}

std::string stressor_key(const VizRecord& r) { return r.stressor; }
std::string location_key(const VizRecord& r) { return r.location; }

double total_stressed(const VizView& v) {
    double total = 0.0;
    for (const auto& r : v.records) {
        if (r.stressed) total += r.duration_min;
    }
    return total;
}

ChartSpec share_chart(const VizView& v, std::string_view id, std::string title,
                      const std::function<std::string(const VizRecord&)>& key, const char* dimension) {
    auto c = blank(v, id, std::move(title), "donut");
    const auto t = tally(v, true, key);
    const double total = total_stressed(v);
    ChartSeries s{"share", "Share of stressed duration (%)", {}, nullptr};
    for (const auto& k : ranked(t, by_duration)) {
        auto p = labelled(k, total > 0 ? 100.0 * t.at(k).duration / total : 0.0);
        p.detail["duration_min"] = r6(t.at(k).duration);
        p.detail["reports"] = t.at(k).count;
        s.points.push_back(std::move(p));
    }
    c.series.push_back(std::move(s));
    c.legend = {{"dimension", dimension}, {"toggle", false}};
    c.meta = {{"total_stressed_duration_min", r6(total)}, {"no_data", total <= 0.0}, {"unit", "percent"}};
    return c;
}

json week_axis(int weeks) { return {{"label", "Week"}, {"type", "ordinal"}, {"min", 1}, {"max", weeks}}; }

}  // namespace

std::vector<std::string> schedule_for_week(int week_index) {
    if (week_index < 1) throw Error(ErrorCode::Validation, "week_index must be >= 1");
    const int w = std::min(week_index, kScheduleWeeks);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kChartIds.size(); ++i) {
        if (kIntroducedInWeek[i] <= w) out.emplace_back(kChartIds[i]);
    }
    return out;
}

void to_json(json& j, const ChartPoint& p) {
    j = json{{"x", p.x}, {"y", p.y}, {"value", p.value}, {"label", p.label}, {"detail", p.detail}};
}

void to_json(json& j, const ChartSeries& s) {
    j = json{{"name", s.name}, {"label", s.label}, {"points", s.points}};
    if (!s.summary.is_null()) j["summary"] = s.summary;
}

void to_json(json& j, const ChartSpec& c) {
    j = json{{"schema", kChartSchema},
             {"chart_id", c.chart_id},
             {"title", c.title},
             {"chart_type", c.chart_type},
             {"week_index", c.week_index},
             {"participant_id", c.participant_id},
             {"series", c.series},
             {"axes", c.axes},
             {"legend", c.legend},
             {"color_scale", c.color_scale},
             {"meta", c.meta}};
}

TimeBlock time_block_of_hour(int local_hour) {
    if (local_hour < 0 || local_hour > 23) throw Error(ErrorCode::Validation, "hour outside 0..23");
    return static_cast<TimeBlock>(local_hour / 6);
}

std::string abbreviate(std::string_view label) {
    if (label.size() <= 18) return std::string(label);
    std::string out;
    bool in_word = false;
    for (char ch : label) {
        const auto c = static_cast<unsigned char>(ch);
        const bool word_char = std::isalnum(c) || c >= 0x80;
        if (word_char && !in_word) out.push_back(static_cast<char>(std::toupper(c)));
        in_word = word_char;
    }
    return out.empty() ? std::string(label) : out;
}

VizView make_view(const VizDataset& data, int week_index) {
    if (week_index < 1) throw Error(ErrorCode::Validation, "week_index must be >= 1");
    VizView v;
    v.data = &data;
    v.week_index = week_index;

    std::set<EventId> hidden;
    std::map<EventId, const StressAnnotation*> notes;
    for (const auto& a : data.annotations) {
        if (a.is_private) hidden.insert(a.event_id);
        else notes[a.event_id] = &a;
    }
    for (const auto& id : hidden) notes.erase(id);

    const std::int64_t end_day = data.clock.first_day_of_week(week_index + 1);
    for (const auto& e : data.events) {
        if (hidden.count(e.event_id)) continue;
        if (local_day(e.start, e.tz_offset_min) >= end_day) continue;
        v.events.push_back(&e);
    }
    std::sort(v.events.begin(), v.events.end(), [](const auto* a, const auto* b) {
        return a->start != b->start ? a->start < b->start : a->event_id < b->event_id;
    });

    std::set<std::pair<std::int64_t, int>> hours, hours_now;
    for (const auto* e : v.events) {
        const auto day = local_day(e->start, e->tz_offset_min);
        const int hour = local_hour(e->start, e->tz_offset_min);
        const int week = data.clock.week_index(day);
        hours.emplace(day, hour);
        if (week == week_index) hours_now.emplace(day, hour);
        auto it = notes.find(e->event_id);
        if (it == notes.end()) continue;
        const auto* a = it->second;
        VizRecord r;
        r.event = e;
        r.annotation = a;
        r.week = week;
        r.day = day;
        r.hour = hour;
        r.duration_min = e->duration_min();
        if (a->has_stressor()) r.stressor = *a->stressor_text;
        r.location = a->semantic_location && !a->semantic_location->empty() ? *a->semantic_location
                                                                            : std::string(kUnspecifiedLocation);
        r.stressed = !r.stressor.empty() && counts_as_stressed(a->rating);
        v.records.push_back(std::move(r));
    }
    v.coverage_hours = hours.size();
    v.coverage_hours_current = hours_now.size();
    return v;
}

ChartSpec build_overall_summary(const VizView& v) {
    auto c = blank(v, "overall_summary", "Stressed minutes per hour", "gauges");
    double stressed_all = 0.0, stressed_now = 0.0;
    std::size_t stressors_all = 0, stressors_now = 0;
    for (const auto& r : v.records) {
        if (r.stressed) {
            stressed_all += r.duration_min;
            if (r.week == v.week_index) stressed_now += r.duration_min;
        }
        if (!r.stressor.empty()) {
            ++stressors_all;
            if (r.week == v.week_index) ++stressors_now;
        }
    }
    const bool no_data = v.coverage_hours == 0;
    const bool no_data_now = v.coverage_hours_current == 0;
    auto gauge = [](const char* name, const char* label, double value, const char* unit) {
        ChartPoint p;
        p.label = label;
        p.value = r6(value);
        p.detail = {{"gauge", name}, {"unit", unit}};
        return p;
    };
    ChartSeries s{"gauges", "Summary", {}, nullptr};
    s.points.push_back(gauge("overall_stressed_minutes_per_hour", "Overall stressed minutes per hour",
                             no_data ? 0.0 : stressed_all / static_cast<double>(v.coverage_hours), "min/h"));
    s.points.push_back(gauge("current_week_stressed_minutes_per_hour", "This week's stressed minutes per hour",
                             no_data_now ? 0.0 : stressed_now / static_cast<double>(v.coverage_hours_current),
                             "min/h"));
    s.points.push_back(gauge("average_stressors_per_week", "Average stressors per week",
                             no_data ? 0.0 : static_cast<double>(stressors_all) / v.week_index, "count/week"));
    s.points.push_back(gauge("current_week_daily_stressors", "Stressors per day this week",
                             no_data_now ? 0.0 : static_cast<double>(stressors_now) / 7.0, "count/day"));
    c.series.push_back(std::move(s));
    c.meta = {{"no_data", no_data},
              {"current_week_no_data", no_data_now},
              {"coverage_hours", v.coverage_hours},
              {"coverage_hours_current_week", v.coverage_hours_current},
              {"stressed_minutes", r6(stressed_all)},
              {"stressor_reports", stressors_all}};
    return c;
}

ChartSpec build_prominent_stressor_context(const VizView& v) {
    auto c = blank(v, "prominent_stressor_context", "Where and when your top stressors happen", "sunburst");
    const auto by_stressor = tally(v, true, stressor_key);
    const auto top = ranked(by_stressor, by_duration, kTopContext);
    // stressor -> location -> block -> duration
    std::map<std::string, std::map<std::string, std::map<int, double>>> tree;
    for (const auto& r : v.records) {
        if (!r.stressed) continue;
        tree[r.stressor][r.location][static_cast<int>(time_block_of_hour(r.hour))] += r.duration_min;
    }
    ChartSeries ring1{"stressors", "Stressor", {}, nullptr};
    ChartSeries ring2{"locations", "Location", {}, nullptr};
    ChartSeries ring3{"time_blocks", "Time of day", {}, nullptr};
    double shown = 0.0;
    for (const auto& s : top) {
        auto p = labelled(s, by_stressor.at(s).duration);
        p.detail["path"] = json::array({s});
        ring1.points.push_back(std::move(p));
        shown += by_stressor.at(s).duration;
        std::map<std::string, Tally> locs;
        for (const auto& [loc, blocks] : tree[s]) {
            for (const auto& [b, d] : blocks) locs[loc].duration += d;
        }
        for (const auto& loc : ranked(locs, by_duration)) {
            auto lp = labelled(loc, locs[loc].duration);
            lp.detail["parent"] = s;
            lp.detail["path"] = json::array({s, loc});
            ring2.points.push_back(std::move(lp));
            for (const auto& [b, d] : tree[s][loc]) {
                ChartPoint bp;
                bp.label = std::string(kTimeBlockNames[b]);
                bp.value = r6(d);
                bp.detail = {{"full_text", kTimeBlockNames[b]},
                             {"parent", loc},
                             {"path", json::array({s, loc, kTimeBlockNames[b]})}};
                ring3.points.push_back(std::move(bp));
            }
        }
    }
    c.series = {std::move(ring1), std::move(ring2), std::move(ring3)};
    const double total = total_stressed(v);
    c.legend = {{"dimension", "stressor"}, {"toggle", false}};
    c.meta = {{"total_stressed_duration_min", r6(total)},
              {"other_duration_min", r6(total - shown)},
              {"top_n", kTopContext},
              {"unit", "minutes"},
              {"time_blocks", {{"night", "00-06"}, {"morning", "06-12"}, {"afternoon", "12-18"}, {"evening", "18-24"}}},
              {"no_data", total <= 0.0}};
    return c;
}

ChartSpec build_map_view(const VizView& v) {
    auto c = blank(v, "map_view", "Where you reported stress", "map");
    std::map<std::string, int> first_week;
    for (const auto& r : v.records) {
        if (r.stressor.empty()) continue;
        auto [it, fresh] = first_week.emplace(r.location, r.week);
        if (!fresh) it->second = std::min(it->second, r.week);
    }
    std::map<std::string, ChartSeries> by_loc;
    for (const auto& r : v.records) {
        if (r.stressor.empty()) continue;
        const auto gps = r.annotation->gps ? r.annotation->gps : r.event->location;
        if (!gps) continue;
        auto& s = by_loc[r.location];
        s.name = r.location;
        s.label = abbreviate(r.location);
        ChartPoint p;
        p.x = r6(gps->lon);
        p.y = r6(gps->lat);
        p.value = r6(r.duration_min);
        p.label = abbreviate(r.stressor);
        p.detail = {{"stressor", r.stressor},
                    {"full_text", r.stressor},
                    {"location", r.location},
                    {"day", format_date(r.day)},
                    {"weekday", kWeekdayNames[weekday_of_day(r.day)]},
                    {"time", format_clock(r.event->start, r.event->tz_offset_min)},
                    {"new_this_week", first_week[r.location] == v.week_index}};
        s.points.push_back(std::move(p));
    }
    json items = json::array();
    for (auto& [loc, s] : by_loc) {
        items.push_back({{"name", loc}, {"label", s.label}, {"new_this_week", first_week[loc] == v.week_index}});
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", {{"label", "Longitude"}, {"type", "linear"}}}, {"y", {{"label", "Latitude"}, {"type", "linear"}}}};
    c.legend = {{"dimension", "location"}, {"toggle", true}, {"items", items}};
    c.meta = {{"no_data", c.series.empty()}};
    return c;
}

ChartSpec build_stressor_prevalence(const VizView& v) {
    return share_chart(v, "stressor_prevalence", "Share of stressed time by stressor", stressor_key, "stressor");
}

ChartSpec build_location_prominence(const VizView& v) {
    return share_chart(v, "location_prominence", "Share of stressed time by location", location_key, "location");
}

ChartSpec build_calendar_view(const VizView& v) {
    auto c = blank(v, "calendar_view", "Calendar of reported stressors", "heatmap");
    struct Cell {
        std::set<std::string> stressors;
        double score_sum = 0.0;
        std::size_t scored = 0;
        double stressed_min = 0.0;
    };
    std::map<std::pair<std::int64_t, int>, Cell> cells;
    for (const auto& r : v.records) {
        if (r.stressor.empty()) continue;
        auto& cell = cells[{r.day, r.hour}];
        cell.stressors.insert(r.stressor);
        if (r.stressed) cell.stressed_min += r.duration_min;
    }
    for (const auto* e : v.events) {
        if (e->source != EventSource::Detected) continue;
        auto it = cells.find({local_day(e->start, e->tz_offset_min), local_hour(e->start, e->tz_offset_min)});
        if (it == cells.end()) continue;
        it->second.score_sum += e->score;
        it->second.scored += 1;
    }
    ChartSeries s{"cells", "Stress likelihood", {}, nullptr};
    for (const auto& [key, cell] : cells) {
        ChartPoint p;
        p.x = format_date(key.first);
        p.y = key.second;
        const bool scored = cell.scored > 0;
        p.value = scored ? r6(cell.score_sum / static_cast<double>(cell.scored)) : 0.0;
        json stressors = json::array(), labels = json::array();
        for (const auto& st : cell.stressors) {
            stressors.push_back(st);
            labels.push_back(abbreviate(st));
        }
        std::string label;
        for (const auto& l : labels) label += (label.empty() ? "" : ", ") + l.get<std::string>();
        p.label = label;
        p.detail = {{"stressors", stressors},
                    {"mean_score", scored ? json(r6(cell.score_sum / static_cast<double>(cell.scored))) : json()},
                    {"stressed_minutes", r6(cell.stressed_min)},
                    {"weekday", kWeekdayNames[weekday_of_day(key.first)]}};
        s.points.push_back(std::move(p));
    }
    c.series.push_back(std::move(s));
    c.axes = {{"x", {{"label", "Date"}, {"type", "ordinal"}}},
              {"y", {{"label", "Hour of day"}, {"type", "ordinal"}, {"min", 0}, {"max", 23}}}};
    c.color_scale = {{"palette", kSequential}, {"type", "sequential"}, {"domain", {0, 100}},
                     {"encodes", "stress likelihood"}};
    c.meta = {{"no_data", cells.empty()}};
    return c;
}

ChartSpec build_stressor_ranking(const VizView& v) {
    auto c = blank(v, "stressor_ranking", "Stressors ranked by stress likelihood", "bar");
    std::map<std::string, Tally> scores;  // duration field holds the score sum
    for (const auto& r : v.records) {
        if (r.stressor.empty() || r.event->source != EventSource::Detected) continue;
        auto& t = scores[r.stressor];
        t.duration += r.event->score;
        t.count += 1;
    }
    const auto mean_score = [](const Tally& t) { return t.duration / static_cast<double>(t.count); };
    ChartSeries s{"mean_score", "Average stress likelihood", {}, nullptr};
    for (const auto& k : ranked(scores, mean_score, kTopFrequency)) {
        auto p = labelled(k, mean_score(scores.at(k)));
        p.x = p.label;
        p.detail["reports"] = scores.at(k).count;
        s.points.push_back(std::move(p));
    }
    c.series.push_back(std::move(s));
    c.axes = {{"x", {{"label", "Stressor"}, {"type", "ordinal"}}},
              {"y", {{"label", "Average stress likelihood"}, {"type", "linear"}, {"min", 0}, {"max", 100}}}};
    c.meta = {{"no_data", scores.empty()}, {"top_n", kTopFrequency}, {"ranked_by", "mean detector score"}};
    return c;
}

ChartSpec build_weekly_trend(const VizView& v) {
    auto c = blank(v, "weekly_trend", "Weekly count of each stressor", "line");
    const auto counts = tally(v, false, stressor_key);
    const auto top = ranked(counts, by_count, kTopFrequency);
    std::map<std::string, std::map<int, int>> per_week;
    for (const auto& r : v.records) {
        if (!r.stressor.empty()) per_week[r.stressor][r.week] += 1;
    }
    for (const auto& st : top) {
        ChartSeries s{st, abbreviate(st), {}, nullptr};
        for (int w = 1; w <= v.week_index; ++w) {
            ChartPoint p = labelled(st, per_week[st][w]);
            p.x = w;
            s.points.push_back(std::move(p));
        }
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", week_axis(v.week_index)}, {"y", {{"label", "Reports"}, {"type", "linear"}, {"min", 0}}}};
    c.legend = {{"dimension", "stressor"}, {"toggle", true}};
    c.meta = {{"no_data", top.empty()}, {"top_n", kTopFrequency}, {"distinct_stressors", counts.size()}};
    return c;
}

ChartSpec build_weekly_prevalence(const VizView& v) {
    auto c = blank(v, "weekly_prevalence", "Stressor prevalence by week", "bubble");
    const auto counts = tally(v, false, stressor_key);
    const auto top = ranked(counts, by_count, kTopFrequency);
    std::map<std::string, std::map<int, int>> per_week;
    for (const auto& r : v.records) {
        if (!r.stressor.empty()) per_week[r.stressor][r.week] += 1;
    }
    ChartSeries s{"bubbles", "Reports", {}, nullptr};
    for (const auto& st : top) {
        for (const auto& [w, n] : per_week[st]) {
            ChartPoint p = labelled(st, n);
            p.x = w;
            p.y = p.label;
            s.points.push_back(std::move(p));
        }
    }
    c.series.push_back(std::move(s));
    c.axes = {{"x", week_axis(v.week_index)}, {"y", {{"label", "Stressor"}, {"type", "ordinal"}}}};
    c.legend = {{"dimension", "stressor"}, {"toggle", true}, {"size_encodes", "report count"}};
    c.meta = {{"no_data", top.empty()}, {"top_n", kTopFrequency}};
    return c;
}

ChartSpec build_time_of_day_trend(const VizView& v) {
    auto c = blank(v, "time_of_day_trend", "When in the day each stressor occurs", "scatter");
    const auto counts = tally(v, false, stressor_key);
    const auto top = ranked(counts, by_count, kTopFrequency);
    std::map<std::string, std::map<std::pair<int, int>, int>> cells;
    for (const auto& r : v.records) {
        if (!r.stressor.empty()) cells[r.stressor][{r.week, static_cast<int>(time_block_of_hour(r.hour))}] += 1;
    }
    for (const auto& st : top) {
        ChartSeries s{st, abbreviate(st), {}, nullptr};
        for (const auto& [key, n] : cells[st]) {
            ChartPoint p = labelled(st, n);
            p.x = key.first;
            p.y = kTimeBlockNames[key.second];
            s.points.push_back(std::move(p));
        }
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", week_axis(v.week_index)},
              {"y", {{"label", "Time of day"}, {"type", "ordinal"}, {"categories", kTimeBlockNames}}}};
    c.legend = {{"dimension", "stressor"}, {"toggle", true}};
    c.meta = {{"no_data", top.empty()}, {"top_n", kTopFrequency}};
    return c;
}

ChartSpec build_location_trend(const VizView& v) {
    auto c = blank(v, "location_trend", "Stress reports by location over the weeks", "scatter");
    const auto counts = tally(v, false, location_key);
    const auto top = ranked(counts, by_count, kTopFrequency);
    std::map<std::string, std::map<int, int>> per_week;
    for (const auto& r : v.records) {
        if (!r.stressor.empty()) per_week[r.location][r.week] += 1;
    }
    for (const auto& loc : top) {
        ChartSeries s{loc, abbreviate(loc), {}, nullptr};
        for (const auto& [w, n] : per_week[loc]) {
            ChartPoint p = labelled(loc, n);
            p.x = w;
            p.y = p.label;
            s.points.push_back(std::move(p));
        }
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", week_axis(v.week_index)}, {"y", {{"label", "Location"}, {"type", "ordinal"}}}};
    c.legend = {{"dimension", "location"}, {"toggle", true}};
    c.meta = {{"no_data", top.empty()}, {"top_n", kTopFrequency}};
    return c;
}

ChartSpec build_day_of_week(const VizView& v) {
    auto c = blank(v, "day_of_week", "Stressors by day of the week", "grouped_bar");
    const auto counts = tally(v, false, stressor_key);
    const auto top = ranked(counts, by_count, kTopFrequency);
    std::map<std::string, std::array<int, 7>> days;
    for (const auto& r : v.records) {
        if (!r.stressor.empty()) days[r.stressor][static_cast<std::size_t>(weekday_of_day(r.day))] += 1;
    }
    for (const auto& st : top) {
        ChartSeries s{st, abbreviate(st), {}, nullptr};
        for (int d = 0; d < 7; ++d) {
            ChartPoint p = labelled(st, days[st][static_cast<std::size_t>(d)]);
            p.x = kWeekdayNames[static_cast<std::size_t>(d)];
            s.points.push_back(std::move(p));
        }
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", {{"label", "Day of week"}, {"type", "ordinal"}, {"categories", kWeekdayNames}}},
              {"y", {{"label", "Reports"}, {"type", "linear"}, {"min", 0}}}};
    c.legend = {{"dimension", "stressor"}, {"toggle", true}};
    c.meta = {{"no_data", top.empty()}, {"top_n", kTopFrequency}};
    return c;
}

ChartSpec build_duration_distribution(const VizView& v) {
    auto c = blank(v, "duration_distribution", "How long your most frequent stressors last", "violin");
    const auto counts = tally(v, false, stressor_key);
    const auto top = ranked(counts, by_count, kTopContext);
    std::map<std::string, std::vector<double>> durations;
    for (const auto& r : v.records) {
        if (!r.stressor.empty()) durations[r.stressor].push_back(r.duration_min);
    }
    for (const auto& st : top) {
        const auto& d = durations[st];
        const auto box = box_stats(d);
        const auto kde = gaussian_kde(d);
        ChartSeries s{st, abbreviate(st), {}, nullptr};
        for (std::size_t i = 0; i < kde.x.size(); ++i) {
            ChartPoint p;
            p.x = r6(kde.x[i]);
            p.value = r6(kde.y[i]);
            s.points.push_back(std::move(p));
        }
        json outliers = json::array();
        for (double o : box.outliers) outliers.push_back(r6(o));
        s.summary = {{"full_text", st},
                     {"n", d.size()},
                     {"q1", r6(box.q1)},
                     {"median", r6(box.median)},
                     {"q3", r6(box.q3)},
                     {"whisker_low", r6(box.whisker_low)},
                     {"whisker_high", r6(box.whisker_high)},
                     {"outliers", outliers},
                     {"bandwidth", r6(kde.bandwidth)}};
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", {{"label", "Duration (minutes)"}, {"type", "linear"}}},
              {"y", {{"label", "Density"}, {"type", "linear"}}}};
    c.legend = {{"dimension", "stressor"}, {"toggle", false}};
    c.meta = {{"no_data", top.empty()},
              {"top_n", kTopContext},
              {"quantile_method", "type7"},
              {"kernel", "gaussian"},
              {"bandwidth_rule", "nrd0"}};
    return c;
}

ChartSpec build_prevalent_duration(const VizView& v) {
    auto c = blank(v, "prevalent_duration", "Average weekly duration of your top stressors", "bar");
    const auto counts = tally(v, false, stressor_key);
    const auto top = ranked(counts, by_count, kTopContext);
    std::map<std::string, std::map<int, Tally>> weekly;
    for (const auto& r : v.records) {
        if (r.stressor.empty()) continue;
        auto& t = weekly[r.stressor][r.week];
        t.duration += r.duration_min;
        t.count += 1;
    }
    for (const auto& st : top) {
        ChartSeries s{st, abbreviate(st), {}, nullptr};
        for (int w = 1; w <= v.week_index; ++w) {
            const auto it = weekly[st].find(w);
            const double avg = it == weekly[st].end() ? 0.0 : it->second.duration / static_cast<double>(it->second.count);
            ChartPoint p = labelled(st, avg);
            p.x = w;
            p.detail["reports"] = it == weekly[st].end() ? 0 : it->second.count;
            p.detail["current_week"] = w == v.week_index;
            s.points.push_back(std::move(p));
        }
        c.series.push_back(std::move(s));
    }
    c.axes = {{"x", week_axis(v.week_index)}, {"y", {{"label", "Average duration (minutes)"}, {"type", "linear"}}}};
    c.legend = {{"dimension", "stressor"}, {"toggle", false}, {"highlight", "current_week"}};
    c.meta = {{"no_data", top.empty()}, {"top_n", kTopContext}};
    return c;
}

namespace {

ChartSpec word_cloud(const VizView& v, std::string_view id, std::string title,
                     const std::function<std::string(const VizRecord&)>& key, const char* dimension) {
    auto c = blank(v, id, std::move(title), "word_cloud");
    const auto counts = tally(v, false, key);
    ChartSeries s{"words", dimension, {}, nullptr};
    for (const auto& k : ranked(counts, by_count)) {
        ChartPoint p;
        p.label = k;
        p.value = static_cast<double>(counts.at(k).count);
        p.detail = {{"full_text", k}};
        s.points.push_back(std::move(p));
    }
    c.series.push_back(std::move(s));
    c.legend = {{"dimension", dimension}, {"size_encodes", "report count"}};
    c.meta = {{"no_data", counts.empty()}};
    return c;
}

}  // namespace

ChartSpec build_stressor_word_cloud(const VizView& v) {
    return word_cloud(v, "stressor_word_cloud", "Your stressors", stressor_key, "stressor");
}

ChartSpec build_location_word_cloud(const VizView& v) {
    return word_cloud(v, "location_word_cloud", "Your stress locations", location_key, "location");
}

ChartSpec build_chart(std::string_view chart_id, const VizView& v) {
    using Builder = ChartSpec (*)(const VizView&);
    static const std::map<std::string_view, Builder> builders = {
        {"overall_summary", build_overall_summary},
        {"prominent_stressor_context", build_prominent_stressor_context},
        {"map_view", build_map_view},
        {"stressor_prevalence", build_stressor_prevalence},
        {"location_prominence", build_location_prominence},
        {"calendar_view", build_calendar_view},
        {"stressor_ranking", build_stressor_ranking},
        {"weekly_trend", build_weekly_trend},
        {"weekly_prevalence", build_weekly_prevalence},
        {"time_of_day_trend", build_time_of_day_trend},
        {"location_trend", build_location_trend},
        {"day_of_week", build_day_of_week},
        {"duration_distribution", build_duration_distribution},
        {"prevalent_duration", build_prevalent_duration},
        {"stressor_word_cloud", build_stressor_word_cloud},
        {"location_word_cloud", build_location_word_cloud},
    };
    auto it = builders.find(chart_id);
    if (it == builders.end()) throw Error(ErrorCode::NotFound, "unknown chart '" + std::string(chart_id) + "'");
    return it->second(v);
}

ChartBundle assemble_bundle(const VizDataset& data, int week_index) {
    const auto ids = schedule_for_week(week_index);
    const auto view = make_view(data, week_index);
    ChartBundle b;
    b.participant_id = data.participant_id;
    b.week_index = week_index;
    for (const auto& id : ids) b.charts.push_back(build_chart(id, view));
    return b;
}

json bundle_manifest(const ChartBundle& bundle) {
    json charts = json::array();
    for (const auto& c : bundle.charts) {
        charts.push_back({{"chart_id", c.chart_id}, {"title", c.title}, {"file", c.chart_id + ".json"}});
    }
    return {{"schema", kBundleSchema},
            {"participant_id", bundle.participant_id},
            {"week_index", bundle.week_index},
            {"schedule_week", std::min(bundle.week_index, kScheduleWeeks)},
            {"chart_count", bundle.charts.size()},
            {"charts", charts}};
}

void write_bundle(const ChartBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [](const std::filesystem::path& p, const json& j) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Validation, "cannot write " + p.string());
        out << j.dump(2) << '\n';
    };
    for (const auto& c : bundle.charts) write(dir / (c.chart_id + ".json"), json(c));
    write(dir / "manifest.json", bundle_manifest(bundle));
}

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::InsufficientData, "box plot of empty sample");
    std::sort(values.begin(), values.end());
    BoxStats b;
    b.q1 = stats::quantile_type7(values, 0.25);
    b.median = stats::quantile_type7(values, 0.5);
    b.q3 = stats::quantile_type7(values, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
    b.whisker_low = b.q1;
    b.whisker_high = b.q3;
    for (double v : values) {
        if (v >= lo) {
            b.whisker_low = std::min(v, b.q1);
            break;
        }
    }
    for (auto it = values.rbegin(); it != values.rend(); ++it) {
        if (*it <= hi) {
            b.whisker_high = std::max(*it, b.q3);
            break;
        }
    }
    for (double v : values) {
        if (v < lo || v > hi) b.outliers.push_back(v);
    }
    return b;
}

double silverman_bandwidth(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::InsufficientData, "bandwidth of empty sample");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double hi = s.size() > 1 ? std::sqrt(stats::variance(s, 1)) : 0.0;
    const double iqr = stats::quantile_type7(s, 0.75) - stats::quantile_type7(s, 0.25);
    double lo = std::min(hi, iqr / 1.34);
    if (!(lo > 0.0)) lo = hi;
    if (!(lo > 0.0)) lo = std::abs(s.front());
    if (!(lo > 0.0)) lo = 1.0;
    return 0.9 * lo * std::pow(static_cast<double>(s.size()), -0.2);
}

Density gaussian_kde(std::span<const double> values, std::size_t points) {
    if (points < 2) throw Error(ErrorCode::Validation, "KDE needs at least two sample points");
    Density d;
    d.bandwidth = silverman_bandwidth(values);
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double from = *mn - 3.0 * d.bandwidth, to = *mx + 3.0 * d.bandwidth;
    const double step = (to - from) / static_cast<double>(points - 1);
    const double norm = 1.0 / (static_cast<double>(values.size()) * d.bandwidth * std::sqrt(2.0 * M_PI));
    d.x.resize(points);
    d.y.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = from + step * static_cast<double>(i);
        double acc = 0.0;
        for (double v : values) {
            const double u = (x - v) / d.bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        d.x[i] = x;
        d.y[i] = acc * norm;
    }
    return d;
}

}  // namespace moods::viz
