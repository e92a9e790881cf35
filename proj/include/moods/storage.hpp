#pragma once

// Append-only per-participant logs. Each participant directory holds
// events.log, annotations.log and surveys.log; every line is
//   <crc32 as 8 hex digits> <json record>
// with record = {seq, kind, id, ver, body}. Loading replays complete lines
// in order, stops at the first torn or corrupt line, and (optionally) cuts
// the file back to the last good byte. snapshot.json captures the folded
// state plus per-log byte horizons so a load only replays the tail.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "moods/annotation_store.hpp"
#include "moods/domain.hpp"
#include "moods/event_engine.hpp"
#include "moods/json_io.hpp"
#include "moods/survey_engine.hpp"

namespace moods::storage {

inline constexpr std::string_view kSnapshotSchema = "moods.snapshot/2";

struct ParticipantRecord {
    ParticipantId participant_id;
    std::int64_t enrollment_day = 0;
    int tz_offset_min = 0;

    friend bool operator==(const ParticipantRecord&, const ParticipantRecord&) = default;
};

void to_json(json& j, const ParticipantRecord& r);
void from_json(const json& j, ParticipantRecord& r);

enum class LogFile : int { Events = 0, Annotations = 1, Surveys = 2 };
inline constexpr std::array<const char*, 3> kLogNames = {"events.log", "annotations.log", "surveys.log"};

/// Record kinds and the log each one lives in.
LogFile log_for_kind(std::string_view kind);

struct LogRecord {
    std::uint64_t seq = 0;
    std::string kind;
    std::string id;
    std::uint64_t ver = 0;
    json body;
};

/// "<crc> <json>\n" for a record.
std::string encode_line(const LogRecord& r);
/// Parses one line without its newline; nullopt when the checksum or JSON is bad.
std::optional<LogRecord> decode_line(std::string_view line);

struct ParticipantState {
    std::optional<ParticipantRecord> participant;
    std::map<EventId, PhysiologicalEvent> events;
    std::map<EventId, events::PromptTicket> tickets;
    std::map<EventId, StressAnnotation> annotations;
    std::map<EventId, annotations::StressorTask> tasks;
    std::map<std::string, annotations::LexiconEntry> lexicon;
    std::map<int, surveys::SurveyInstance> survey_instances;
    std::map<int, WeeklySurvey> surveys;
    std::uint64_t last_seq = 0;

    /// Folds one record in; returns false when the body equals what the state
    /// already holds for (kind, id), so repeats are no-ops.
    bool apply(const LogRecord& r);

    /// FNV-1a over the canonical JSON of the folded state (seq excluded).
    std::uint64_t hash() const;

    friend bool operator==(const ParticipantState&, const ParticipantState&) = default;
};

void to_json(json& j, const ParticipantState& s);
void from_json(const json& j, ParticipantState& s);

struct StoreOptions {
    bool repair_torn_tail = true;  // truncate logs to the last good line on load
    bool flush_each_append = true;
    bool use_snapshot = true;
};

struct LoadReport {
    std::size_t records = 0;          // lines replayed (after the snapshot horizon)
    std::size_t duplicates = 0;       // lines that changed nothing
    std::size_t dropped_bytes = 0;    // torn or corrupt tail bytes
    bool from_snapshot = false;
};

/// Storage for one participant. Appends are serialized internally; readers
/// take immutable snapshots via state().
class ParticipantStore {
public:
    ParticipantStore(std::filesystem::path dir, ParticipantId participant, StoreOptions options = {});

    const ParticipantId& participant() const noexcept { return participant_; }
    const std::filesystem::path& dir() const noexcept { return dir_; }

    std::shared_ptr<const ParticipantState> state() const;
    const LoadReport& load_report() const noexcept { return report_; }

    /// Appends a record unless its body repeats the current (kind, id) entry;
    /// returns whether anything was written.
    bool append(std::string_view kind, std::string_view id, std::uint64_t ver, const json& body);

    bool put_participant(const ParticipantRecord& r);
    bool put_event(const PhysiologicalEvent& e);
    bool put_ticket(const events::PromptTicket& t);
    bool put_annotation(const StressAnnotation& a);
    bool put_task(const annotations::StressorTask& t);
    bool put_lexicon(const annotations::LexiconEntry& e);
    bool put_survey_instance(const surveys::SurveyInstance& s);
    bool put_survey(const WeeklySurvey& s);

    /// Writes snapshot.json (state + log horizons) atomically.
    void write_snapshot();

    /// Rewrites every log with one record per (kind, id) and refreshes the
    /// snapshot. The folded state (and its hash) is unchanged.
    void compact();

    std::uint64_t log_bytes() const;

private:
    void load();

    std::filesystem::path dir_;
    ParticipantId participant_;
    StoreOptions options_;
    LoadReport report_;

    mutable std::mutex mu_;
    ParticipantState state_;
    mutable std::shared_ptr<const ParticipantState> published_;
    std::array<std::uint64_t, 3> sizes_{};  // current byte length of each log
    std::array<std::unique_ptr<std::ofstream>, 3> out_;
};

/// A data directory with one subdirectory per participant.
class Store {
public:
    explicit Store(std::filesystem::path data_dir, StoreOptions options = {});

    const std::filesystem::path& data_dir() const noexcept { return dir_; }

    /// Participants with a directory on disk or opened in this process, sorted.
    std::vector<ParticipantId> participants() const;
    ParticipantStore& open(const ParticipantId& participant);

private:
    std::filesystem::path dir_;
    StoreOptions options_;
    mutable std::mutex mu_;
    std::map<ParticipantId, std::unique_ptr<ParticipantStore>> open_;
};

/// True when a participant id is safe to use as a directory name.
bool valid_participant_id(std::string_view id) noexcept;

}  // namespace moods::storage
