#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace moods {

using Timestamp = std::int64_t;  // epoch seconds, UTC
using ParticipantId = std::string;
using EventId = std::string;

inline constexpr Timestamp kSecondsPerMinute = 60;
inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode {
    Validation,
    NotFound,
    Conflict,
    Expired,
    Precondition,
    InsufficientData,
    Unauthorized,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Ratings and survey scales
// ---------------------------------------------------------------------------

enum class StressRating : int {
    NotStressed = 0,
    ProbablyNotStressed = 1,
    Unsure = 2,
    ProbablyStressed = 3,
    Stressed = 4,
};

inline constexpr std::array<StressRating, 5> kAllRatings = {
    StressRating::NotStressed, StressRating::ProbablyNotStressed, StressRating::Unsure,
    StressRating::ProbablyStressed, StressRating::Stressed};

int rating_to_intensity(StressRating rating) noexcept;
StressRating rating_from_intensity(int intensity);
bool requires_stressor(StressRating rating) noexcept;

/// Events rated ProbablyStressed or Stressed contribute to stressed-minute totals.
/// Unsure opens a stressor prompt but does not count as stressed time.
bool counts_as_stressed(StressRating rating) noexcept;

std::string_view rating_name(StressRating rating) noexcept;      // "probably_stressed"
std::string_view rating_label(StressRating rating) noexcept;     // "Probably stressed"
StressRating parse_rating(std::string_view text);                // accepts name or label

enum class FrequencyChoice : int {
    AtMostOnce = 1,
    AtMostTwice = 2,
    AtMostThrice = 3,
    FourOrMore = 4,
};

inline constexpr std::array<FrequencyChoice, 4> kAllFrequencyChoices = {
    FrequencyChoice::AtMostOnce, FrequencyChoice::AtMostTwice, FrequencyChoice::AtMostThrice,
    FrequencyChoice::FourOrMore};

std::string_view frequency_label(FrequencyChoice choice) noexcept;
FrequencyChoice parse_frequency(std::string_view label);
int frequency_to_value(FrequencyChoice choice) noexcept;
int frequency_to_value(std::string_view label);
FrequencyChoice frequency_from_value(int value);

enum class VizImpact : int {
    AwarenessOfPatterns,
    ContextualUnderstanding,
    MotivatedToReduce,
    TookSpecificAction,
    SawReduction,
    ReinforcedBenefit,
    None,
};

inline constexpr std::array<VizImpact, 7> kAllVizImpacts = {
    VizImpact::AwarenessOfPatterns, VizImpact::ContextualUnderstanding,
    VizImpact::MotivatedToReduce,   VizImpact::TookSpecificAction,
    VizImpact::SawReduction,        VizImpact::ReinforcedBenefit,
    VizImpact::None};

std::string_view viz_impact_name(VizImpact impact) noexcept;
std::string_view viz_impact_label(VizImpact impact) noexcept;
VizImpact parse_viz_impact(std::string_view text);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

enum class EventSource { Detected, Manual };

struct PhysiologicalEvent {
    EventId event_id;
    ParticipantId participant_id;
    Timestamp start = 0;
    Timestamp end = 0;
    double score = 0.0;  // stress likelihood, 0..100; meaningless for manual events
    int tz_offset_min = 0;
    EventSource source = EventSource::Detected;
    std::optional<GeoPoint> location;

    double duration_min() const noexcept { return static_cast<double>(end - start) / 60.0; }

    /// Throws Error{Validation} when an invariant does not hold.
    void validate() const;

    friend bool operator==(const PhysiologicalEvent&, const PhysiologicalEvent&) = default;
};

struct StressAnnotation {
    EventId event_id;
    ParticipantId participant_id;
    StressRating rating = StressRating::NotStressed;
    std::optional<std::string> stressor_text;
    std::optional<std::string> semantic_location;
    std::optional<GeoPoint> gps;
    bool is_private = false;
    bool is_manual = false;
    Timestamp created_at = 0;
    std::optional<Timestamp> edited_at;
    std::optional<std::int64_t> entry_duration_s;
    std::uint64_t revision = 1;

    bool has_stressor() const noexcept { return stressor_text.has_value() && !stressor_text->empty(); }

    friend bool operator==(const StressAnnotation&, const StressAnnotation&) = default;
};

struct WeeklySurvey {
    ParticipantId participant_id;
    int week_index = 1;
    FrequencyChoice frequency = FrequencyChoice::AtMostOnce;
    int recall_ease = 1;  // 1..5
    std::set<VizImpact> viz_impacts;
    Timestamp submitted_at = 0;
    bool late = false;

    int frequency_value() const noexcept { return frequency_to_value(frequency); }
    void validate() const;

    friend bool operator==(const WeeklySurvey&, const WeeklySurvey&) = default;
};

// ---------------------------------------------------------------------------
// Local time
// ---------------------------------------------------------------------------

/// Days since 1970-01-01 in the participant's local time.
std::int64_t local_day(Timestamp ts, int tz_offset_min) noexcept;
/// Seconds since local midnight.
std::int64_t local_second_of_day(Timestamp ts, int tz_offset_min) noexcept;
int local_hour(Timestamp ts, int tz_offset_min) noexcept;
/// 0 = Monday ... 6 = Sunday.
int local_weekday(Timestamp ts, int tz_offset_min) noexcept;
int weekday_of_day(std::int64_t day) noexcept;
/// UTC timestamp of local midnight starting the given local day.
Timestamp local_midnight(std::int64_t day, int tz_offset_min) noexcept;
/// "YYYY-MM-DD" for a day number.
std::string format_date(std::int64_t day);
/// "HH:MM" local.
std::string format_clock(Timestamp ts, int tz_offset_min);

inline constexpr std::array<std::string_view, 7> kWeekdayNames = {
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};

struct StudyClock {
    ParticipantId participant_id;
    std::int64_t enrollment_day = 0;  // local day number

    /// 1-based; days before enrollment clamp to week 1.
    int week_index(std::int64_t day) const noexcept;
    int week_index_at(Timestamp ts, int tz_offset_min) const noexcept {
        return week_index(local_day(ts, tz_offset_min));
    }
    std::int64_t first_day_of_week(int week) const noexcept { return enrollment_day + 7LL * (week - 1); }
};

}  // namespace moods
