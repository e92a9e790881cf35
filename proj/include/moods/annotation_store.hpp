#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moods/domain.hpp"
#include "moods/event_engine.hpp"

namespace moods::annotations {

/// Case-folds (ASCII), trims and collapses internal whitespace runs to one space.
std::string normalize_stressor(std::string_view text);

/// The shipped 80-entry seed vocabulary (data/stressors_seed.txt, embedded at build time).
const std::vector<std::string>& default_seed_stressors();

/// One stressor per line, UTF-8. Blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_seed_file(const std::string& path);

struct LexiconEntry {
    std::string text;  // normalized
    Timestamp first_seen = 0;
    std::uint64_t use_count = 0;
    bool seeded = false;

    friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

/// Immutable view of a lexicon, sorted by text.
struct LexiconSnapshot {
    std::vector<LexiconEntry> entries;

    const LexiconEntry* find(std::string_view normalized) const;
};

/// Ranked completion: case-insensitive substring matches, prefix matches first,
/// then use_count descending, then lexicographic.
std::vector<std::string> autocomplete(const LexiconSnapshot& lexicon, std::string_view query,
                                      std::size_t limit);

/// Per-participant stressor vocabulary. Writers are serialized by the caller;
/// readers take a snapshot() and never block.
class StressorLexicon {
public:
    explicit StressorLexicon(std::span<const std::string> seed = default_seed_stressors());

    std::shared_ptr<const LexiconSnapshot> snapshot() const;
    std::size_t size() const { return snapshot()->entries.size(); }

    /// Inserts or bumps the entry for `text`; returns the updated entry.
    LexiconEntry upsert(std::string_view text, Timestamp at);

    /// Replaces/adds an entry verbatim (log replay).
    void restore_entry(const LexiconEntry& entry);

private:
    void publish(std::vector<LexiconEntry> entries);

    std::shared_ptr<const LexiconSnapshot> current_;
};

struct EventContext {
    std::string date;        // local YYYY-MM-DD
    std::string start_time;  // local HH:MM
    double duration_min = 0.0;
    double score = 0.0;
    std::optional<GeoPoint> location;

    friend bool operator==(const EventContext&, const EventContext&) = default;
};

EventContext make_event_context(const PhysiologicalEvent& event);

struct StressorTask {
    EventId event_id;
    Timestamp opened_at = 0;
    EventContext context;
    bool closed = false;

    friend bool operator==(const StressorTask&, const StressorTask&) = default;
};

struct RatingOutcome {
    StressAnnotation annotation;
    std::optional<StressorTask> task;
    bool duplicate = false;
};

struct AnnotationPatch {
    std::optional<StressRating> rating;
    std::optional<std::string> stressor_text;
    std::optional<bool> is_private;

    bool empty() const noexcept { return !rating && !stressor_text && !is_private; }
};

struct AnnotationConfig {
    Timestamp manual_default_duration_s = 5 * 60;
};

struct ManualReport {
    PhysiologicalEvent event;
    StressAnnotation annotation;
};

class AnnotationStore {
public:
    AnnotationStore(ParticipantId participant, std::span<const std::string> seed = default_seed_stressors(),
                    AnnotationConfig config = {});

    const ParticipantId& participant() const noexcept { return participant_; }

    RatingOutcome submit_rating(const events::PromptTicket& ticket, const PhysiologicalEvent& event,
                                StressRating rating, Timestamp now);

    std::vector<std::string> autocomplete(std::string_view query, std::size_t limit) const;

    StressAnnotation complete_annotation(const EventId& event_id, std::string_view stressor_text,
                                         std::optional<std::string> semantic_location,
                                         std::optional<GeoPoint> gps, Timestamp now);

    StressAnnotation edit_annotation(const EventId& event_id, const AnnotationPatch& patch, Timestamp now);

    ManualReport manual_report(StressRating rating, std::string_view stressor_text,
                               std::optional<std::string> semantic_location, Timestamp at, Timestamp now,
                               int tz_offset_min = 0, std::optional<Timestamp> duration_s = std::nullopt,
                               std::optional<GeoPoint> gps = std::nullopt);

    const StressAnnotation* find(const EventId& event_id) const;
    const StressorTask* open_task(const EventId& event_id) const;
    const std::map<EventId, StressAnnotation>& annotations() const noexcept { return annotations_; }
    const std::map<EventId, StressorTask>& tasks() const noexcept { return tasks_; }
    const StressorLexicon& lexicon() const noexcept { return lexicon_; }

    /// Stressor-entry durations in seconds, ordered by completion time.
    std::vector<std::int64_t> entry_durations() const;

    /// Entries touched by the most recent mutating call (for persistence).
    const std::vector<LexiconEntry>& last_lexicon_writes() const noexcept { return lexicon_writes_; }

    void restore(std::vector<StressAnnotation> annotations, std::vector<StressorTask> tasks,
                 std::vector<LexiconEntry> lexicon_entries);

private:
    ParticipantId participant_;
    AnnotationConfig config_;
    StressorLexicon lexicon_;
    std::map<EventId, StressAnnotation> annotations_;
    std::map<EventId, StressorTask> tasks_;
    std::vector<LexiconEntry> lexicon_writes_;
    std::uint64_t manual_seq_ = 0;
};

}  // namespace moods::annotations
