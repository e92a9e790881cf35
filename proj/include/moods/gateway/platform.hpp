#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "moods/analysis.hpp"
#include "moods/annotation_store.hpp"
#include "moods/domain.hpp"
#include "moods/event_engine.hpp"
#include "moods/storage.hpp"
#include "moods/survey_engine.hpp"
#include "moods/vizkit.hpp"

namespace moods::gateway {

using Clock = std::function<Timestamp()>;

Timestamp system_now();

/// A clock the caller advances by hand (replays, tests).
class ManualClock {
public:
    explicit ManualClock(Timestamp start = 0) : now_(start) {}
    Timestamp now() const noexcept { return now_.load(); }
    void set(Timestamp t) noexcept { now_.store(t); }
    void advance(Timestamp dt) noexcept { now_.fetch_add(dt); }
    Clock as_clock() const {
        return [this] { return now(); };
    }

private:
    std::atomic<Timestamp> now_;
};

struct PlatformConfig {
    events::EngineConfig engine{};
    surveys::SurveyConfig survey{};
    annotations::AnnotationConfig annotation{};
    std::optional<std::filesystem::path> data_dir;  // in-memory only when unset
    storage::StoreOptions store{};
};

struct EventIngest {
    events::IngestResult result;
    bool enrolled = false;  // first event for this participant
};

/// The participant-facing services behind the API. State per participant
/// lives in a runtime guarded by its own mutex, so participants never block
/// each other; every mutation is appended to the participant's log before
/// the call returns.
class Platform {
public:
    explicit Platform(PlatformConfig config, Clock clock = system_now);
    ~Platform();
    Platform(const Platform&) = delete;
    Platform& operator=(const Platform&) = delete;

    Timestamp now() const { return clock_(); }
    const PlatformConfig& config() const noexcept { return config_; }

    /// Explicit enrollment. Conflict if the participant exists with another day.
    void enroll(const ParticipantId& participant, std::int64_t enrollment_day, int tz_offset_min);
    bool enrolled(const ParticipantId& participant) const;
    std::vector<ParticipantId> participants() const;

    /// Unknown participants are enrolled on the local day of their first event.
    EventIngest ingest_event(const PhysiologicalEvent& event);
    std::vector<events::PromptTicket> pending(const ParticipantId& participant);

    annotations::RatingOutcome submit_rating(const ParticipantId& participant, const EventId& event_id,
                                             StressRating rating);
    std::vector<std::string> autocomplete(const ParticipantId& participant, std::string_view query,
                                          std::size_t limit);
    StressAnnotation complete_annotation(const ParticipantId& participant, const EventId& event_id,
                                         std::string_view stressor_text, std::optional<std::string> semantic_location,
                                         std::optional<GeoPoint> gps);
    StressAnnotation edit_annotation(const ParticipantId& participant, const EventId& event_id,
                                     const annotations::AnnotationPatch& patch);
    annotations::ManualReport manual_report(const ParticipantId& participant, StressRating rating,
                                            std::string_view stressor_text,
                                            std::optional<std::string> semantic_location, Timestamp at,
                                            std::optional<Timestamp> duration_s, std::optional<GeoPoint> gps,
                                            std::optional<int> tz_offset_min);

    /// Timeline of the participant's events with their tickets and annotations.
    json dashboard(const ParticipantId& participant);
    viz::VizDataset viz_dataset(const ParticipantId& participant);
    viz::ChartBundle visualizations(const ParticipantId& participant, int week_index);

    /// Latest due survey; opened on first request. Precondition when none is due.
    surveys::SurveyInstance current_survey(const ParticipantId& participant);
    /// week_index 0 means the latest due week.
    WeeklySurvey submit_survey(const ParticipantId& participant, WeeklySurvey survey);

    /// Records for analysis; one participant or (empty) the whole cohort.
    analysis::StudyData study_data(const std::optional<ParticipantId>& participant = std::nullopt) const;

    /// Writes a snapshot for every participant with a log.
    void snapshot_all();

private:
    struct Runtime;
    Runtime& runtime(const ParticipantId& participant) const;
    Runtime* find_runtime(const ParticipantId& participant) const;
    Runtime& create_runtime(const ParticipantId& participant, std::int64_t enrollment_day, int tz_offset_min);
    void restore_all();

    PlatformConfig config_;
    Clock clock_;
    std::unique_ptr<storage::Store> store_;
    mutable std::shared_mutex mu_;
    std::map<ParticipantId, std::unique_ptr<Runtime>> runtimes_;
};

}  // namespace moods::gateway
