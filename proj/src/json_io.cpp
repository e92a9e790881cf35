#include "moods/json_io.hpp"

#include <cmath>

namespace moods {

namespace {

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void to_json(json& j, const GeoPoint& g) { j = json{{"lat", g.lat}, {"lon", g.lon}}; }

void from_json(const json& j, GeoPoint& g) {
    g.lat = j.at("lat").get<double>();
    g.lon = j.at("lon").get<double>();
}

void to_json(json& j, const PhysiologicalEvent& e) {
    j = json{{"event_id", e.event_id},
             {"participant_id", e.participant_id},
             {"start", e.start},
             {"end", e.end},
             {"duration_min", std::round(e.duration_min() * 1000.0) / 1000.0},
             {"score", e.score},
             {"tz_offset_min", e.tz_offset_min}};
    if (e.source == EventSource::Manual) j["source"] = "manual";
    if (e.location) j["location"] = *e.location;
}

void from_json(const json& j, PhysiologicalEvent& e) {
    e.event_id = j.at("event_id").get<std::string>();
    e.participant_id = j.at("participant_id").get<std::string>();
    e.start = j.at("start").get<Timestamp>();
    e.end = j.at("end").get<Timestamp>();
    e.score = j.at("score").get<double>();
    e.tz_offset_min = j.value("tz_offset_min", 0);
    e.source = j.value("source", std::string("detected")) == "manual" ? EventSource::Manual
                                                                       : EventSource::Detected;
    e.location = opt<GeoPoint>(j, "location");
    // duration_min is derived; a supplied value must agree with start/end.
    if (auto it = j.find("duration_min"); it != j.end() && it->is_number()) {
        if (std::abs(it->get<double>() - e.duration_min()) > 0.01) {
            throw Error(ErrorCode::Validation, "duration_min disagrees with start/end");
        }
    }
}

void to_json(json& j, const StressAnnotation& a) {
    j = json{{"event_id", a.event_id},
             {"participant_id", a.participant_id},
             {"rating", rating_name(a.rating)},
             {"intensity", rating_to_intensity(a.rating)},
             {"is_private", a.is_private},
             {"is_manual", a.is_manual},
             {"created_at", a.created_at},
             {"revision", a.revision}};
    if (a.stressor_text) j["stressor_text"] = *a.stressor_text;
    if (a.semantic_location) j["semantic_location"] = *a.semantic_location;
    if (a.gps) j["gps"] = *a.gps;
    if (a.edited_at) j["edited_at"] = *a.edited_at;
    if (a.entry_duration_s) j["entry_duration_s"] = *a.entry_duration_s;
}

void from_json(const json& j, StressAnnotation& a) {
    a.event_id = j.at("event_id").get<std::string>();
    a.participant_id = j.value("participant_id", std::string{});
    const auto& r = j.at("rating");
    a.rating = r.is_number_integer() ? rating_from_intensity(r.get<int>()) : parse_rating(r.get<std::string>());
    a.stressor_text = opt<std::string>(j, "stressor_text");
    a.semantic_location = opt<std::string>(j, "semantic_location");
    a.gps = opt<GeoPoint>(j, "gps");
    a.is_private = j.value("is_private", false);
    a.is_manual = j.value("is_manual", false);
    a.created_at = j.value("created_at", Timestamp{0});
    a.edited_at = opt<Timestamp>(j, "edited_at");
    a.entry_duration_s = opt<std::int64_t>(j, "entry_duration_s");
    a.revision = j.value("revision", std::uint64_t{1});
}

void to_json(json& j, const WeeklySurvey& s) {
    json impacts = json::array();
    for (VizImpact v : s.viz_impacts) impacts.push_back(viz_impact_name(v));
    j = json{{"participant_id", s.participant_id},
             {"week_index", s.week_index},
             {"frequency_choice", frequency_label(s.frequency)},
             {"frequency_value", s.frequency_value()},
             {"recall_ease", s.recall_ease},
             {"viz_impacts", impacts},
             {"submitted_at", s.submitted_at},
             {"late", s.late}};
}

void from_json(const json& j, WeeklySurvey& s) {
    s.participant_id = j.value("participant_id", std::string{});
    s.week_index = j.at("week_index").get<int>();
    if (auto it = j.find("frequency_choice"); it != j.end()) {
        s.frequency = it->is_number_integer() ? frequency_from_value(it->get<int>())
                                              : parse_frequency(it->get<std::string>());
    } else {
        s.frequency = frequency_from_value(j.at("frequency_value").get<int>());
    }
    s.recall_ease = j.at("recall_ease").get<int>();
    s.viz_impacts.clear();
    if (auto it = j.find("viz_impacts"); it != j.end()) {
        for (const auto& v : *it) s.viz_impacts.insert(parse_viz_impact(v.get<std::string>()));
    }
    s.submitted_at = j.value("submitted_at", Timestamp{0});
    s.late = j.value("late", false);
}

namespace events {

void to_json(json& j, const PercentileBands& b) {
    j = json{{"p25", b.p25},
             {"p75", b.p75},
             {"p95", b.p95},
             {"source_window_days", b.source_window_days},
             {"sample_count", b.sample_count},
             {"cold_start", b.cold_start}};
}

void to_json(json& j, const PromptTicket& t) {
    j = json{{"event_id", t.event_id},
             {"participant_id", t.participant_id},
             {"issued_at", t.issued_at},
             {"expires_at", t.expires_at},
             {"responded", t.responded},
             {"band", band_name(t.band)},
             {"tz_offset_min", t.tz_offset_min},
             {"revision", t.revision}};
}

void from_json(const json& j, PromptTicket& t) {
    t.event_id = j.at("event_id").get<std::string>();
    t.participant_id = j.at("participant_id").get<std::string>();
    t.issued_at = j.at("issued_at").get<Timestamp>();
    t.expires_at = j.at("expires_at").get<Timestamp>();
    t.responded = j.value("responded", false);
    t.band = parse_band(j.value("band", std::string("low")));
    t.tz_offset_min = j.value("tz_offset_min", 0);
    t.revision = j.value("revision", std::uint64_t{1});
}

void to_json(json& j, const EngineConfig& c) {
    j = json{{"seed", c.seed},
             {"window_days", c.bands.window_days},
             {"cold_start_min_events", c.bands.cold_start_min_events},
             {"probabilities", c.policy.probability},
             {"daily_targets", c.policy.daily_target},
             {"budgets_enabled", c.policy.budgets_enabled},
             {"dispatch_delay_s", c.timing.dispatch_delay_s},
             {"refractory_s", c.timing.refractory_s},
             {"expiry_s", c.timing.expiry_s}};
}

void from_json(const json& j, EngineConfig& c) {
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "window_days") c.bands.window_days = value.get<int>();
        else if (key == "cold_start_min_events") c.bands.cold_start_min_events = value.get<std::size_t>();
        else if (key == "probabilities") c.policy.probability = value.get<std::array<double, 4>>();
        else if (key == "daily_targets") c.policy.daily_target = value.get<std::array<double, 4>>();
        else if (key == "budgets_enabled") c.policy.budgets_enabled = value.get<bool>();
        else if (key == "dispatch_delay_s") c.timing.dispatch_delay_s = value.get<Timestamp>();
        else if (key == "refractory_s") c.timing.refractory_s = value.get<Timestamp>();
        else if (key == "expiry_s") c.timing.expiry_s = value.get<Timestamp>();
        else throw Error(ErrorCode::Validation, "unknown engine config key '" + key + "'");
    }
    c.policy.validate();
}

}  // namespace events

namespace annotations {

void to_json(json& j, const LexiconEntry& e) {
    j = json{{"text", e.text}, {"first_seen", e.first_seen}, {"use_count", e.use_count}, {"seeded", e.seeded}};
}

void from_json(const json& j, LexiconEntry& e) {
    e.text = j.at("text").get<std::string>();
    e.first_seen = j.value("first_seen", Timestamp{0});
    e.use_count = j.value("use_count", std::uint64_t{0});
    e.seeded = j.value("seeded", false);
}

void to_json(json& j, const EventContext& c) {
    j = json{{"date", c.date},
             {"start_time", c.start_time},
             {"duration_min", std::round(c.duration_min * 1000.0) / 1000.0},
             {"score", c.score}};
    if (c.location) j["location"] = *c.location;
}

void from_json(const json& j, EventContext& c) {
    c.date = j.value("date", std::string{});
    c.start_time = j.value("start_time", std::string{});
    c.duration_min = j.value("duration_min", 0.0);
    c.score = j.value("score", 0.0);
    c.location = opt<GeoPoint>(j, "location");
}

void to_json(json& j, const StressorTask& t) {
    j = json{{"event_id", t.event_id}, {"opened_at", t.opened_at}, {"context", t.context}, {"closed", t.closed}};
}

void from_json(const json& j, StressorTask& t) {
    t.event_id = j.at("event_id").get<std::string>();
    t.opened_at = j.at("opened_at").get<Timestamp>();
    t.context = j.value("context", EventContext{});
    t.closed = j.value("closed", false);
}

}  // namespace annotations

namespace surveys {

void to_json(json& j, const SurveyInstance& s) {
    json freq = json::array();
    for (auto c : kAllFrequencyChoices) freq.push_back({{"label", frequency_label(c)}, {"value", frequency_to_value(c)}});
    json impacts = json::array();
    for (auto v : kAllVizImpacts) impacts.push_back({{"name", viz_impact_name(v)}, {"label", viz_impact_label(v)}});
    j = json{{"participant_id", s.participant_id},
             {"week_index", s.week_index},
             {"opened_at", s.opened_at},
             {"due_at", s.due_at},
             {"closes_at", s.closes_at},
             {"submitted", s.submitted},
             {"frequency_options", freq},
             {"recall_ease_scale", {{"min", 1}, {"max", 5}}},
             {"viz_impact_options", impacts}};
}

void from_json(const json& j, SurveyInstance& s) {
    s.participant_id = j.value("participant_id", std::string{});
    s.week_index = j.at("week_index").get<int>();
    s.opened_at = j.value("opened_at", Timestamp{0});
    s.due_at = j.value("due_at", Timestamp{0});
    s.closes_at = j.value("closes_at", Timestamp{0});
    s.submitted = j.value("submitted", false);
}

}  // namespace surveys

}  // namespace moods
