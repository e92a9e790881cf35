#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "moods/domain.hpp"

namespace moods::surveys {

struct SurveyConfig {
    int due_hour = 8;  // local Sunday
    Timestamp window_s = 48 * kSecondsPerHour;
    bool accept_late = true;
};

struct SurveyInstance {
    ParticipantId participant_id;
    int week_index = 1;
    Timestamp opened_at = 0;
    Timestamp due_at = 0;
    Timestamp closes_at = 0;
    bool submitted = false;

    friend bool operator==(const SurveyInstance&, const SurveyInstance&) = default;
};

/// Weekly survey schedule for one participant. The survey for week w falls on
/// the first local Sunday on or after the last day of week w, at due_hour; each
/// Sunday therefore maps to exactly one study week. Local time follows the
/// tz offset of the participant's most recent event.
class SurveyEngine {
public:
    SurveyEngine(StudyClock clock, SurveyConfig config = {});

    const StudyClock& clock() const noexcept { return clock_; }
    const SurveyConfig& config() const noexcept { return config_; }

    void set_tz_offset(int tz_offset_min) noexcept { tz_offset_min_ = tz_offset_min; }
    int tz_offset() const noexcept { return tz_offset_min_; }

    Timestamp due_at(int week_index) const;
    Timestamp closes_at(int week_index) const { return due_at(week_index) + config_.window_s; }

    /// Latest week whose survey is due at `now`, or 0 when none is.
    int latest_due_week(Timestamp now) const;

    /// Throws Precondition before the week's survey is due, Conflict when an
    /// instance already exists.
    SurveyInstance open_survey(int week_index, Timestamp now);

    /// Stores the response. Submissions after the window are flagged late (or
    /// rejected as Expired when late acceptance is off).
    WeeklySurvey submit_survey(int week_index, WeeklySurvey survey, Timestamp now);

    const SurveyInstance* instance(int week_index) const;
    const std::map<int, SurveyInstance>& instances() const noexcept { return instances_; }
    const std::map<int, WeeklySurvey>& responses() const noexcept { return responses_; }

    void restore(std::vector<SurveyInstance> instances, std::vector<WeeklySurvey> responses);

private:
    StudyClock clock_;
    SurveyConfig config_;
    int tz_offset_min_ = 0;
    std::map<int, SurveyInstance> instances_;
    std::map<int, WeeklySurvey> responses_;
};

enum class SurveyMetric { Frequency, RecallEase };

/// Cohort mean per week over submitted responses: sum(values)/count. Weeks
/// without responses are absent.
std::map<int, double> weekly_cohort_mean(std::span<const WeeklySurvey> responses, SurveyMetric metric);

}  // namespace moods::surveys
