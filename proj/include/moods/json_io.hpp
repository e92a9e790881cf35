#pragma once

// JSON mapping of domain records. Used by the storage logs, the HTTP API and
// the line-delimited export files, so every field name here is part of the
// wire format.

#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "moods/annotation_store.hpp"
#include "moods/domain.hpp"
#include "moods/event_engine.hpp"
#include "moods/survey_engine.hpp"

namespace moods {

using json = nlohmann::json;

void to_json(json& j, const GeoPoint& g);
void from_json(const json& j, GeoPoint& g);

void to_json(json& j, const PhysiologicalEvent& e);
void from_json(const json& j, PhysiologicalEvent& e);

void to_json(json& j, const StressAnnotation& a);
void from_json(const json& j, StressAnnotation& a);

void to_json(json& j, const WeeklySurvey& s);
void from_json(const json& j, WeeklySurvey& s);

namespace events {
void to_json(json& j, const PercentileBands& b);
void to_json(json& j, const PromptTicket& t);
void from_json(const json& j, PromptTicket& t);
void to_json(json& j, const EngineConfig& c);
/// Keys absent from `j` keep their defaults; unknown keys are rejected.
void from_json(const json& j, EngineConfig& c);
}  // namespace events

namespace annotations {
void to_json(json& j, const LexiconEntry& e);
void from_json(const json& j, LexiconEntry& e);
void to_json(json& j, const EventContext& c);
void from_json(const json& j, EventContext& c);
void to_json(json& j, const StressorTask& t);
void from_json(const json& j, StressorTask& t);
}  // namespace annotations

namespace surveys {
void to_json(json& j, const SurveyInstance& s);
void from_json(const json& j, SurveyInstance& s);
}  // namespace surveys

/// Reads one JSON document per non-empty line. Throws Error{Validation} with the
/// offending line number on malformed input.
template <typename T>
std::vector<T> read_lines(std::istream& in) {
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const Error&) {
            throw;
        } catch (const std::exception& ex) {
            throw Error(ErrorCode::Validation, "line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

template <typename T>
void write_lines(std::ostream& out, const std::vector<T>& items) {
    for (const auto& item : items) out << json(item).dump() << '\n';
}

}  // namespace moods
