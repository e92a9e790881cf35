#include "moods/domain.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace moods {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Validation: return "validation";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::Expired: return "expired";
        case ErrorCode::Precondition: return "precondition";
        case ErrorCode::InsufficientData: return "insufficient_data";
        case ErrorCode::Unauthorized: return "unauthorized";
    }
    return "unknown";
}

namespace {

std::string fold(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == ' ' || c == '-' || c == '_' || c == '\'' || c == ',') {
            if (!out.empty() && out.back() != '_') out.push_back('_');
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

}  // namespace

int rating_to_intensity(StressRating rating) noexcept { return static_cast<int>(rating); }

StressRating rating_from_intensity(int intensity) {
    if (intensity < 0 || intensity > 4) {
        throw Error(ErrorCode::Validation, "stress intensity must be in 0..4");
    }
    return static_cast<StressRating>(intensity);
}

bool requires_stressor(StressRating rating) noexcept {
    return rating == StressRating::Unsure || rating == StressRating::ProbablyStressed ||
           rating == StressRating::Stressed;
}

bool counts_as_stressed(StressRating rating) noexcept {
    return rating == StressRating::ProbablyStressed || rating == StressRating::Stressed;
}

std::string_view rating_name(StressRating rating) noexcept {
    switch (rating) {
        case StressRating::NotStressed: return "not_stressed";
        case StressRating::ProbablyNotStressed: return "probably_not_stressed";
        case StressRating::Unsure: return "unsure";
        case StressRating::ProbablyStressed: return "probably_stressed";
        case StressRating::Stressed: return "stressed";
    }
    return "unsure";
}

std::string_view rating_label(StressRating rating) noexcept {
    switch (rating) {
        case StressRating::NotStressed: return "Not stressed";
        case StressRating::ProbablyNotStressed: return "Probably not stressed";
        case StressRating::Unsure: return "Unsure";
        case StressRating::ProbablyStressed: return "Probably stressed";
        case StressRating::Stressed: return "Stressed";
    }
    return "Unsure";
}

StressRating parse_rating(std::string_view text) {
    const std::string key = fold(text);
    for (StressRating r : kAllRatings) {
        if (key == rating_name(r)) return r;
    }
    if (key.size() == 1 && key[0] >= '0' && key[0] <= '4') return rating_from_intensity(key[0] - '0');
    throw Error(ErrorCode::Validation, "unknown stress rating '" + std::string(text) + "'");
}

std::string_view frequency_label(FrequencyChoice choice) noexcept {
    switch (choice) {
        case FrequencyChoice::AtMostOnce: return "At most once";
        case FrequencyChoice::AtMostTwice: return "More than once but at most twice";
        case FrequencyChoice::AtMostThrice: return "More than twice but at most three times";
        case FrequencyChoice::FourOrMore: return "Four or more times";
    }
    return "At most once";
}

FrequencyChoice parse_frequency(std::string_view label) {
    const std::string key = fold(label);
    for (FrequencyChoice c : kAllFrequencyChoices) {
        if (key == fold(frequency_label(c))) return c;
    }
    throw Error(ErrorCode::Validation, "unknown stress frequency option '" + std::string(label) + "'");
}

int frequency_to_value(FrequencyChoice choice) noexcept { return static_cast<int>(choice); }

int frequency_to_value(std::string_view label) { return frequency_to_value(parse_frequency(label)); }

FrequencyChoice frequency_from_value(int value) {
    if (value < 1 || value > 4) throw Error(ErrorCode::Validation, "stress frequency must be in 1..4");
    return static_cast<FrequencyChoice>(value);
}

std::string_view viz_impact_name(VizImpact impact) noexcept {
    switch (impact) {
        case VizImpact::AwarenessOfPatterns: return "awareness";
        case VizImpact::ContextualUnderstanding: return "context";
        case VizImpact::MotivatedToReduce: return "motivated";
        case VizImpact::TookSpecificAction: return "took_action";
        case VizImpact::SawReduction: return "saw_reduction";
        case VizImpact::ReinforcedBenefit: return "reinforced";
        case VizImpact::None: return "none";
    }
    return "none";
}

std::string_view viz_impact_label(VizImpact impact) noexcept {
    switch (impact) {
        case VizImpact::AwarenessOfPatterns: return "Improved my awareness of stress patterns";
        case VizImpact::ContextualUnderstanding:
            return "Improved the contextual understanding of my stressors";
        case VizImpact::MotivatedToReduce: return "Motivated me to work towards reducing my stress";
        case VizImpact::TookSpecificAction: return "I took specific action to reduce my stress";
        case VizImpact::SawReduction:
            return "Helped me see the reduction in stress due to my recent behavior change";
        case VizImpact::ReinforcedBenefit: return "Reinforced the benefit of my recent behavior change";
        case VizImpact::None: return "None of the above";
    }
    return "None of the above";
}

VizImpact parse_viz_impact(std::string_view text) {
    const std::string key = fold(text);
    for (VizImpact v : kAllVizImpacts) {
        if (key == viz_impact_name(v) || key == fold(viz_impact_label(v))) return v;
    }
    throw Error(ErrorCode::Validation, "unknown visualization impact '" + std::string(text) + "'");
}

void PhysiologicalEvent::validate() const {
    if (event_id.empty()) throw Error(ErrorCode::Validation, "event_id is required");
    if (participant_id.empty()) throw Error(ErrorCode::Validation, "participant_id is required");
    if (end <= start) throw Error(ErrorCode::Validation, "event end must be after start");
    if (!(score >= 0.0 && score <= 100.0)) {
        throw Error(ErrorCode::Validation, "event score must be in [0,100]");
    }
    if (tz_offset_min < -14 * 60 || tz_offset_min > 14 * 60) {
        throw Error(ErrorCode::Validation, "tz_offset_min out of range");
    }
}

void WeeklySurvey::validate() const {
    if (participant_id.empty()) throw Error(ErrorCode::Validation, "participant_id is required");
    if (week_index < 1) throw Error(ErrorCode::Validation, "week_index must be >= 1");
    if (recall_ease < 1 || recall_ease > 5) throw Error(ErrorCode::Validation, "recall_ease must be in 1..5");
    if (viz_impacts.count(VizImpact::None) && viz_impacts.size() > 1) {
        throw Error(ErrorCode::Validation, "'none' cannot be combined with other impacts");
    }
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::int64_t local_day(Timestamp ts, int tz_offset_min) noexcept {
    return floor_div(ts + static_cast<Timestamp>(tz_offset_min) * kSecondsPerMinute, kSecondsPerDay);
}

std::int64_t local_second_of_day(Timestamp ts, int tz_offset_min) noexcept {
    const Timestamp local = ts + static_cast<Timestamp>(tz_offset_min) * kSecondsPerMinute;
    return local - floor_div(local, kSecondsPerDay) * kSecondsPerDay;
}

int local_hour(Timestamp ts, int tz_offset_min) noexcept {
    return static_cast<int>(local_second_of_day(ts, tz_offset_min) / kSecondsPerHour);
}

int weekday_of_day(std::int64_t day) noexcept {
    // 1970-01-01 was a Thursday (index 3 with Monday = 0).
    return static_cast<int>(((day % 7) + 7 + 3) % 7);
}

int local_weekday(Timestamp ts, int tz_offset_min) noexcept {
    return weekday_of_day(local_day(ts, tz_offset_min));
}

Timestamp local_midnight(std::int64_t day, int tz_offset_min) noexcept {
    return day * kSecondsPerDay - static_cast<Timestamp>(tz_offset_min) * kSecondsPerMinute;
}

std::string format_date(std::int64_t day) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_clock(Timestamp ts, int tz_offset_min) {
    const auto sec = local_second_of_day(ts, tz_offset_min);
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(sec / 3600), static_cast<int>((sec % 3600) / 60));
    return buf;
}

int StudyClock::week_index(std::int64_t day) const noexcept {
    if (day < enrollment_day) return 1;
    return static_cast<int>((day - enrollment_day) / 7) + 1;
}

}  // namespace moods
