#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moods/domain.hpp"
#include "moods/json_io.hpp"

namespace moods::viz {

inline constexpr std::string_view kChartSchema = "moods.chart/1";
inline constexpr std::string_view kBundleSchema = "moods.bundle/1";
inline constexpr int kScheduleWeeks = 14;

inline constexpr std::array<std::string_view, 16> kChartIds = {
    "overall_summary",      "prominent_stressor_context", "map_view",           "stressor_prevalence",
    "location_prominence",  "calendar_view",              "stressor_ranking",   "weekly_trend",
    "weekly_prevalence",    "time_of_day_trend",          "location_trend",     "day_of_week",
    "duration_distribution", "prevalent_duration",        "stressor_word_cloud", "location_word_cloud"};

/// Week in which each chart joins the bundle (parallel to kChartIds).
inline constexpr std::array<int, 16> kIntroducedInWeek = {1, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 14};

/// Charts in the bundle for a week: everything introduced up to min(week, 14).
std::vector<std::string> schedule_for_week(int week_index);

struct ChartPoint {
    json x;  // null when unused
    json y;
    double value = 0.0;
    std::string label;
    json detail = json::object();
};

struct ChartSeries {
    std::string name;
    std::string label;
    std::vector<ChartPoint> points;
    json summary;  // per-series statistics (box plot numbers etc.), null when unused
};

struct ChartSpec {
    std::string chart_id;
    std::string title;
    std::string chart_type;
    int week_index = 1;
    ParticipantId participant_id;
    std::vector<ChartSeries> series;
    json axes = json::object();
    json legend = json::object();
    json color_scale = json::object();
    json meta = json::object();
};

void to_json(json& j, const ChartPoint& p);
void to_json(json& j, const ChartSeries& s);
void to_json(json& j, const ChartSpec& c);

/// Everything a participant has logged. Builders filter it themselves.
struct VizDataset {
    ParticipantId participant_id;
    StudyClock clock;
    std::vector<PhysiologicalEvent> events;
    std::vector<StressAnnotation> annotations;
};

enum class TimeBlock { Night = 0, Morning = 1, Afternoon = 2, Evening = 3 };
inline constexpr std::array<std::string_view, 4> kTimeBlockNames = {"night", "morning", "afternoon", "evening"};
TimeBlock time_block_of_hour(int local_hour);

/// Initial letters of each word (split on non-alphanumerics), upper-cased, for
/// labels longer than 18 characters; shorter labels are returned unchanged.
std::string abbreviate(std::string_view label);

/// One annotated event after the privacy filter, as the charts see it.
struct VizRecord {
    const PhysiologicalEvent* event = nullptr;
    const StressAnnotation* annotation = nullptr;
    int week = 1;
    std::int64_t day = 0;
    int hour = 0;
    double duration_min = 0.0;
    std::string stressor;  // empty when none was entered
    std::string location;  // "unspecified" when none was entered
    bool stressed = false; // ProbablyStressed or Stressed with a stressor
};

inline constexpr std::string_view kUnspecifiedLocation = "unspecified";

/// Cumulative view through `week_index`: private annotations and their events
/// are removed, then everything after the week is dropped.
struct VizView {
    const VizDataset* data = nullptr;
    int week_index = 1;
    std::vector<const PhysiologicalEvent*> events;  // non-private, through the week
    std::vector<VizRecord> records;                 // annotated, ordered by event start then id
    std::size_t coverage_hours = 0;
    std::size_t coverage_hours_current = 0;
};

VizView make_view(const VizDataset& data, int week_index);

ChartSpec build_overall_summary(const VizView& v);
ChartSpec build_prominent_stressor_context(const VizView& v);
ChartSpec build_map_view(const VizView& v);
ChartSpec build_stressor_prevalence(const VizView& v);
ChartSpec build_location_prominence(const VizView& v);
ChartSpec build_calendar_view(const VizView& v);
ChartSpec build_stressor_ranking(const VizView& v);
ChartSpec build_weekly_trend(const VizView& v);
ChartSpec build_weekly_prevalence(const VizView& v);
ChartSpec build_time_of_day_trend(const VizView& v);
ChartSpec build_location_trend(const VizView& v);
ChartSpec build_day_of_week(const VizView& v);
ChartSpec build_duration_distribution(const VizView& v);
ChartSpec build_prevalent_duration(const VizView& v);
ChartSpec build_stressor_word_cloud(const VizView& v);
ChartSpec build_location_word_cloud(const VizView& v);

ChartSpec build_chart(std::string_view chart_id, const VizView& v);

struct ChartBundle {
    ParticipantId participant_id;
    int week_index = 1;
    std::vector<ChartSpec> charts;
};

/// Charts scheduled for the week, each over all data from week 1 through it.
ChartBundle assemble_bundle(const VizDataset& data, int week_index);

json bundle_manifest(const ChartBundle& bundle);
/// Writes <chart_id>.json per chart plus manifest.json into `dir`.
void write_bundle(const ChartBundle& bundle, const std::filesystem::path& dir);

// Helpers shared with tests.
struct BoxStats {
    double q1 = 0.0, median = 0.0, q3 = 0.0;
    double whisker_low = 0.0, whisker_high = 0.0;
    std::vector<double> outliers;
};
BoxStats box_stats(std::vector<double> values);

/// R's bw.nrd0 rule of thumb with its fallbacks for degenerate samples.
double silverman_bandwidth(std::span<const double> values);

struct Density {
    double bandwidth = 0.0;
    std::vector<double> x;
    std::vector<double> y;
};
/// Gaussian KDE on `points` evenly spaced samples over [min - 3h, max + 3h].
Density gaussian_kde(std::span<const double> values, std::size_t points = 256);

}  // namespace moods::viz
