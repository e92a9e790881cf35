#include "moods/survey_engine.hpp"

namespace moods::surveys {

SurveyEngine::SurveyEngine(StudyClock clock, SurveyConfig config) : clock_(std::move(clock)), config_(config) {
    if (config_.due_hour < 0 || config_.due_hour > 23) throw Error(ErrorCode::Validation, "due_hour must be 0..23");
    if (config_.window_s <= 0) throw Error(ErrorCode::Validation, "survey window must be positive");
}

Timestamp SurveyEngine::due_at(int week_index) const {
    if (week_index < 1) throw Error(ErrorCode::Validation, "week_index must be >= 1");
    const std::int64_t last_day = clock_.first_day_of_week(week_index) + 6;
    const std::int64_t sunday = last_day + (6 - weekday_of_day(last_day));
    return local_midnight(sunday, tz_offset_min_) + config_.due_hour * kSecondsPerHour;
}

int SurveyEngine::latest_due_week(Timestamp now) const {
    if (now < due_at(1)) return 0;
    // Sundays are seven days apart, so consecutive weeks' due times are too.
    return 1 + static_cast<int>((now - due_at(1)) / (7 * kSecondsPerDay));
}

SurveyInstance SurveyEngine::open_survey(int week_index, Timestamp now) {
    const Timestamp due = due_at(week_index);
    if (now < due) {
        throw Error(ErrorCode::Precondition, "week " + std::to_string(week_index) + " survey is not due yet");
    }
    if (instances_.count(week_index)) {
        throw Error(ErrorCode::Conflict, "survey for week " + std::to_string(week_index) + " already exists");
    }
    SurveyInstance inst{clock_.participant_id, week_index, now, due, due + config_.window_s, false};
    instances_.emplace(week_index, inst);
    return inst;
}

WeeklySurvey SurveyEngine::submit_survey(int week_index, WeeklySurvey survey, Timestamp now) {
    auto it = instances_.find(week_index);
    if (it == instances_.end()) {
        throw Error(ErrorCode::Precondition, "no open survey for week " + std::to_string(week_index));
    }
    if (it->second.submitted) {
        throw Error(ErrorCode::Conflict, "survey for week " + std::to_string(week_index) + " already submitted");
    }
    survey.participant_id = clock_.participant_id;
    survey.week_index = week_index;
    survey.submitted_at = now;
    survey.validate();
    survey.late = now > it->second.closes_at;
    if (survey.late && !config_.accept_late) {
        throw Error(ErrorCode::Expired, "survey window for week " + std::to_string(week_index) + " closed");
    }
    it->second.submitted = true;
    responses_[week_index] = survey;
    return survey;
}

const SurveyInstance* SurveyEngine::instance(int week_index) const {
    auto it = instances_.find(week_index);
    return it == instances_.end() ? nullptr : &it->second;
}

void SurveyEngine::restore(std::vector<SurveyInstance> instances, std::vector<WeeklySurvey> responses) {
    instances_.clear();
    responses_.clear();
    for (auto& i : instances) instances_[i.week_index] = std::move(i);
    for (auto& r : responses) {
        if (auto it = instances_.find(r.week_index); it != instances_.end()) it->second.submitted = true;
        responses_[r.week_index] = std::move(r);
    }
}

std::map<int, double> weekly_cohort_mean(std::span<const WeeklySurvey> responses, SurveyMetric metric) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : responses) {
        auto& [sum, n] = acc[r.week_index];
        sum += metric == SurveyMetric::Frequency ? r.frequency_value() : r.recall_ease;
        n += 1;
    }
    std::map<int, double> out;
    for (const auto& [w, sn] : acc) out[w] = sn.first / sn.second;
    return out;
}

}  // namespace moods::surveys
