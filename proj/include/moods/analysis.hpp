#pragma once

// Cohort-level analyses over platform records: weekly aggregation, trend
// tests, mixed models, baseline and group comparisons, retention, field
// rates, entry-time learning and interrupted time series.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moods/domain.hpp"
#include "moods/event_engine.hpp"
#include "moods/json_io.hpp"
#include "moods/stats/its.hpp"
#include "moods/stats/lmm.hpp"
#include "moods/stats/nonparametric.hpp"
#include "moods/stats/resampling.hpp"
#include "moods/stats/trend.hpp"

namespace moods::sim {
struct Dataset;
}

namespace moods::analysis {

inline constexpr std::string_view kReportSchema = "moods.report/1";

struct ParticipantInfo {
    ParticipantId participant_id;
    std::int64_t enrollment_day = 0;
    int tz_offset_min = 0;
};

/// Everything the analyses read, for any number of participants.
struct StudyData {
    int n_weeks = 14;
    std::vector<ParticipantInfo> participants;
    std::vector<PhysiologicalEvent> events;  // detected and manual
    std::vector<events::PromptTicket> tickets;
    std::vector<StressAnnotation> annotations;
    std::vector<WeeklySurvey> surveys;
};

StudyData from_dataset(const sim::Dataset& data);

/// Reads a directory written by write_dataset() or a storage data directory.
StudyData load_study(const std::filesystem::path& dir);

enum class Metric { Intensity, Frequency, RecallEase };
const char* metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);

enum class Weighting { ParticipantMean, Pooled };
const char* weighting_name(Weighting w) noexcept;
Weighting parse_weighting(std::string_view name);

struct ParticipantWeek {
    ParticipantId participant_id;
    int week = 1;
    double sum = 0.0;
    int n = 0;
    double mean() const noexcept { return sum / n; }
};

/// Mean 0..4 intensity per participant-week over prompted, non-private
/// ratings. Manual reports are not part of the sampled series and are left
/// out. Weeks follow the event start in the participant's local time.
std::vector<ParticipantWeek> weekly_intensity(const StudyData& data);
/// One 1..4 value per submitted survey.
std::vector<ParticipantWeek> weekly_frequency(const StudyData& data);
std::vector<ParticipantWeek> weekly_recall_ease(const StudyData& data);
std::vector<ParticipantWeek> weekly_series(const StudyData& data, Metric metric);

/// Reads "participant,week,value" rows (header optional); each row becomes a
/// participant-week with n = 1, repeated rows accumulate.
std::vector<ParticipantWeek> read_weekly_csv(const std::filesystem::path& path);

struct WeeklyMeans {
    std::vector<int> weeks;
    std::vector<double> means;
    std::vector<int> participants;  // contributing participants per week
};

/// Participant-mean: average of participant-week means. Pooled: all
/// observations of the week weighted equally.
WeeklyMeans cohort_weekly_means(const std::vector<ParticipantWeek>& pw, Weighting weighting);

struct TrendAnalysis {
    Metric metric = Metric::Intensity;
    Weighting weighting = Weighting::ParticipantMean;
    int first_week = 1;
    WeeklyMeans series;
    stats::TrendReport trend;
};

/// Mann-Kendall and Theil-Sen over the cohort's weekly means from
/// `first_week` on (2 drops the first week's elevated responses). The slope
/// is per week and the intercept refers to `first_week`.
TrendAnalysis trend_analysis(const std::vector<ParticipantWeek>& pw, Metric metric,
                             Weighting weighting = Weighting::ParticipantMean, int first_week = 1);

struct LmmAnalysis {
    stats::LmmFilterResult filter;
    stats::LmmFit fit;
};

/// Random intercept and slope model on participant-week means with
/// week - 1 as the time covariate.
LmmAnalysis lmm_analysis(const std::vector<ParticipantWeek>& pw, int min_weeks = 5,
                         const stats::LmmOptions& options = {});

struct PairedComparison {
    int week_a = 1;
    int week_b = 4;
    std::size_t n_pairs = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    stats::RankTestResult test;
};

/// Wilcoxon signed-rank on participants observed in both weeks.
PairedComparison week_comparison(const std::vector<ParticipantWeek>& pw, int week_a, int week_b);

struct GroupComparison {
    std::string label_a, label_b;
    std::vector<double> a, b;
    stats::ShapiroWilkResult normality_a, normality_b;
    bool normal = false;  // both groups pass the Shapiro-Wilk gate at 0.05
    stats::RankTestResult test;
};

/// Shapiro-Wilk on each group, then Mann-Whitney U (the analysis stays
/// nonparametric either way; the gate is reported).
GroupComparison compare_groups(std::vector<double> a, std::vector<double> b, std::string label_a = "a",
                               std::string label_b = "b");

/// Participants who reported taking a specific action in some survey, with
/// the first such week.
std::map<ParticipantId, int> action_weeks(const StudyData& data);

/// Per-participant Theil-Sen slope of weekly intensity, action takers versus
/// everyone else (participants need at least `min_weeks` weeks).
GroupComparison action_group_slopes(const StudyData& data, int min_weeks = 5);

/// Last local day offset (from enrollment) with any event or annotation.
std::map<ParticipantId, int> last_active_days(const StudyData& data);
stats::RetentionCurve retention(const StudyData& data, int horizon_days = -1);

struct FieldRates {
    std::size_t prompted_days = 0;  // participant-days with at least one prompt
    std::size_t prompts = 0;
    std::size_t responses = 0;
    std::size_t stressor_records = 0;
    std::size_t unique_stressors = 0;
    std::size_t manual_reports = 0;
    double prompts_per_day = 0.0;
    double responses_per_day = 0.0;
    double response_rate = 0.0;
    double stressors_per_day = 0.0;
    std::vector<std::pair<std::string, std::size_t>> top_stressors;  // by count, 10 at most
};

/// Rates per prompted participant-day. Stressor records count every
/// non-private annotation carrying stressor text, manual ones included.
FieldRates field_rates(const StudyData& data);

struct EntryTimeAnalysis {
    std::vector<int> episode;        // 1-based stressor-entry index
    std::vector<double> mean_s;      // cohort mean entry time at that index
    std::vector<int> participants;
    stats::TrendReport trend;        // m per episode, b at episode 1
};

/// Stressor-entry durations indexed by each participant's entry order,
/// averaged across participants per index up to `max_episode`.
EntryTimeAnalysis entry_time_trend(const StudyData& data, int max_episode = 60);

struct ItsAnalysis {
    std::map<ParticipantId, int> action_weeks;
    stats::ItsReport report;
};

/// Daily mean intensity per annotation day for action takers, aligned on the
/// first week each reported taking an action.
ItsAnalysis its_analysis(const StudyData& data, const stats::ItsOptions& options = {});
std::vector<stats::ItsParticipant> its_cohort(const StudyData& data, const std::map<ParticipantId, int>& weeks);

/// 5th/95th bootstrap envelope of the participant-mean weekly curve over
/// weeks 1..n_weeks, resampling participants.
stats::BootstrapBand weekly_bootstrap(const std::vector<ParticipantWeek>& pw, int n_weeks, int resamples,
                                      std::uint64_t seed);

struct ReportOptions {
    Weighting weighting = Weighting::ParticipantMean;
    int bootstrap_resamples = 200;
    std::uint64_t bootstrap_seed = 7;
    int baseline_week_b = 4;
    int lmm_min_weeks = 5;
    stats::ItsOptions its{};
};

json trends_report(const StudyData& data, const ReportOptions& options = {});
json trend_document(const StudyData& data, Metric metric, const ReportOptions& options = {});
json lmm_report(const StudyData& data, const ReportOptions& options = {});
json its_report(const StudyData& data, const ReportOptions& options = {});
json retention_report(const StudyData& data);
/// Every section above plus field rates, comparisons, entry time and recall ease.
json full_report(const StudyData& data, const ReportOptions& options = {});

json to_json(const TrendAnalysis& t);
json to_json(const LmmAnalysis& l);
json to_json(const PairedComparison& c);
json to_json(const GroupComparison& g);
json to_json(const FieldRates& r);
json to_json(const EntryTimeAnalysis& e);
json to_json(const ItsAnalysis& i);

}  // namespace moods::analysis

namespace moods::stats {
void to_json(json& j, const TrendReport& t);
void to_json(json& j, const LmmFit& f);
void to_json(json& j, const FixedEffect& f);
void to_json(json& j, const ItsReport& r);
void to_json(json& j, const RankTestResult& r);
void to_json(json& j, const ShapiroWilkResult& r);
void to_json(json& j, const RetentionCurve& r);
void to_json(json& j, const BootstrapBand& b);
}  // namespace moods::stats
