#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "moods/domain.hpp"

namespace moods::events {

/// Score bands delimited by a participant's 25th/75th/95th percentiles.
/// Low = [0, p25], Mid = (p25, p75], High = (p75, p95], Top = (p95, 100].
enum class Band : int { Low = 0, Mid = 1, High = 2, Top = 3 };

inline constexpr std::array<Band, 4> kAllBands = {Band::Low, Band::Mid, Band::High, Band::Top};

const char* band_name(Band band) noexcept;
Band parse_band(std::string_view name);

struct PercentileBands {
    double p25 = 25.0;
    double p75 = 75.0;
    double p95 = 95.0;
    int source_window_days = 14;
    std::size_t sample_count = 0;
    bool cold_start = true;

    Band band_of(double score) const noexcept;
};

struct BandConfig {
    int window_days = 14;
    std::size_t cold_start_min_events = 100;
    PercentileBands cold_start_defaults{};
};

/// Nearest-rank percentile over an ascending range: the value at 1-based rank
/// ceil(pct/100 * n), clamped to [1, n].
double nearest_rank_percentile(std::span<const double> sorted, double pct);

/// Empirical bands over the given scores (any order). Throws on empty input.
PercentileBands compute_bands(std::vector<double> scores);

/// Bands in effect on `as_of_day` (a local day number): computed over the
/// participant's non-private events that started in the trailing window of
/// days strictly before it. Falls back to the cold-start defaults while the
/// window holds fewer than `cold_start_min_events` scores.
PercentileBands update_percentiles(const ParticipantId& participant,
                                   std::span<const PhysiologicalEvent> history,
                                   std::int64_t as_of_day, const BandConfig& config,
                                   const std::set<EventId>& private_ids = {});

struct SamplingPolicy {
    // Indexed by Band.
    std::array<double, 4> probability{0.2, 0.1, 0.8, 1.0};
    // Average prompts/day the band is expected to contribute; 0 means uncapped.
    std::array<double, 4> daily_target{1.0, 2.0, 3.0, 0.0};
    bool budgets_enabled = true;

    /// Issued-prompt ceiling per participant-day for a band, or nullopt when uncapped.
    std::optional<int> daily_cap(Band band) const;
    void validate() const;
};

struct BandUsage {
    std::array<int, 4> issued{};
};

struct SelectionDecision {
    bool selected = false;
    Band band = Band::Low;
    double probability = 0.0;
    double draw = 0.0;
    bool capped = false;
};

/// Deterministic uniform draw in [0,1) for an event under a seed. The draw only
/// depends on (seed, event_id), so selection is independent of arrival order.
double selection_draw(std::uint64_t seed, const EventId& event_id) noexcept;

SelectionDecision select_for_prompt(const PhysiologicalEvent& event, const PercentileBands& bands,
                                    const SamplingPolicy& policy, std::uint64_t seed,
                                    const BandUsage* usage_today = nullptr);

struct PromptTicket {
    EventId event_id;
    ParticipantId participant_id;
    Timestamp issued_at = 0;
    Timestamp expires_at = 0;
    bool responded = false;
    Band band = Band::Low;
    int tz_offset_min = 0;
    std::uint64_t revision = 1;

    bool expired_at(Timestamp now) const noexcept { return now > expires_at; }
    friend bool operator==(const PromptTicket&, const PromptTicket&) = default;
};

struct PromptTiming {
    Timestamp dispatch_delay_s = 0;  // must be within [0, 60]
    Timestamp refractory_s = 30 * 60;
    Timestamp expiry_s = 24 * 3600;
};

struct EngineConfig {
    BandConfig bands{};
    SamplingPolicy policy{};
    PromptTiming timing{};
    std::uint64_t seed = 0x5eed;
};

enum class IngestStatus { NotSelected, Issued, Suppressed, Deferred, Duplicate };

const char* ingest_status_name(IngestStatus status) noexcept;

struct IngestResult {
    IngestStatus status = IngestStatus::NotSelected;
    SelectionDecision decision{};
    std::optional<PromptTicket> ticket;
};

/// Prompt scheduling for one participant: keeps the event history, refreshes
/// percentile bands at each local midnight, applies the sampling policy and
/// daily budgets, and issues at most one ticket per event subject to the
/// refractory window. Not thread-safe; callers serialize per participant.
class PromptEngine {
public:
    PromptEngine(ParticipantId participant, EngineConfig config);

    const ParticipantId& participant() const noexcept { return participant_; }
    const EngineConfig& config() const noexcept { return config_; }

    /// Records the event and decides whether to prompt. An event that has not
    /// concluded at `now` is held and issued by poll() once it has.
    IngestResult ingest(const PhysiologicalEvent& event, Timestamp now);

    /// Issues tickets for held events that have concluded by `now`.
    std::vector<IngestResult> poll(Timestamp now);

    /// Issues a ticket for a selected, concluded event. Returns nullopt when the
    /// refractory window suppresses it. Throws Conflict if a ticket exists.
    std::optional<PromptTicket> issue_prompt(const PhysiologicalEvent& event, Band band);

    const PhysiologicalEvent* find_event(const EventId& id) const;
    const PromptTicket* find_ticket(const EventId& id) const;
    std::vector<PromptTicket> pending(Timestamp now) const;
    const std::map<EventId, PromptTicket>& tickets() const noexcept { return tickets_; }
    const std::vector<PhysiologicalEvent>& events() const noexcept { return history_; }

    /// Marks the ticket answered; returns the updated ticket.
    PromptTicket mark_responded(const EventId& id);

    void set_private(const EventId& id, bool is_private);

    /// Adds a manually reported event to the history without prompting.
    void add_manual_event(const PhysiologicalEvent& event);

    PercentileBands bands_for_day(std::int64_t local_day);
    BandUsage usage_on(std::int64_t local_day) const;

    /// Rebuilds state from persisted events and tickets.
    void restore(std::vector<PhysiologicalEvent> events, std::vector<PromptTicket> tickets,
                 std::set<EventId> private_ids);

private:
    void insert_history(const PhysiologicalEvent& event);

    ParticipantId participant_;
    EngineConfig config_;
    std::vector<PhysiologicalEvent> history_;  // sorted by start
    std::map<EventId, Timestamp> index_;  // event id -> start
    std::map<EventId, PromptTicket> tickets_;
    std::set<EventId> private_ids_;
    std::map<std::int64_t, BandUsage> usage_;  // local day -> issued per band
    std::vector<std::pair<PhysiologicalEvent, Band>> held_;
    std::optional<Timestamp> last_issued_;
    std::optional<std::int64_t> bands_day_;
    PercentileBands bands_{};
};

}  // namespace moods::events
