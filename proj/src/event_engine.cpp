#include "moods/event_engine.hpp"

#include <algorithm>
#include <cmath>

namespace moods::events {

const char* band_name(Band band) noexcept {
    switch (band) {
        case Band::Low: return "low";
        case Band::Mid: return "mid";
        case Band::High: return "high";
        case Band::Top: return "top";
    }
    return "low";
}

Band parse_band(std::string_view name) {
    for (Band b : kAllBands) {
        if (name == band_name(b)) return b;
    }
    throw Error(ErrorCode::Validation, "unknown band '" + std::string(name) + "'");
}

Band PercentileBands::band_of(double score) const noexcept {
    if (score > p95) return Band::Top;
    if (score > p75) return Band::High;
    if (score > p25) return Band::Mid;
    return Band::Low;
}

double nearest_rank_percentile(std::span<const double> sorted, double pct) {
    if (sorted.empty()) throw Error(ErrorCode::InsufficientData, "percentile of empty sample");
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

PercentileBands compute_bands(std::vector<double> scores) {
    if (scores.empty()) throw Error(ErrorCode::InsufficientData, "no scores to compute bands from");
    std::sort(scores.begin(), scores.end());
    PercentileBands bands;
    bands.p25 = nearest_rank_percentile(scores, 25.0);
    bands.p75 = nearest_rank_percentile(scores, 75.0);
    bands.p95 = nearest_rank_percentile(scores, 95.0);
    bands.sample_count = scores.size();
    bands.cold_start = false;
    return bands;
}

PercentileBands update_percentiles(const ParticipantId& participant,
                                   std::span<const PhysiologicalEvent> history,
                                   std::int64_t as_of_day, const BandConfig& config,
                                   const std::set<EventId>& private_ids) {
    std::vector<double> scores;
    for (const auto& e : history) {
        if (e.participant_id != participant || e.source != EventSource::Detected) continue;
        if (private_ids.count(e.event_id)) continue;
        const auto day = local_day(e.start, e.tz_offset_min);
        if (day < as_of_day - config.window_days || day >= as_of_day) continue;
        scores.push_back(e.score);
    }
    PercentileBands bands = config.cold_start_defaults;
    if (!scores.empty() && scores.size() >= config.cold_start_min_events) bands = compute_bands(std::move(scores));
    else bands.sample_count = scores.size();
    bands.source_window_days = config.window_days;
    return bands;
}

std::optional<int> SamplingPolicy::daily_cap(Band band) const {
    const double target = daily_target[static_cast<int>(band)];
    if (!budgets_enabled || target <= 0.0) return std::nullopt;
    return static_cast<int>(std::ceil(2.0 * target));
}

void SamplingPolicy::validate() const {
    for (double p : probability) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::Validation, "band probability must be in [0,1]");
    }
    for (double t : daily_target) {
        if (!(t >= 0.0)) throw Error(ErrorCode::Validation, "daily target must be >= 0");
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

double selection_draw(std::uint64_t seed, const EventId& event_id) noexcept {
    const std::uint64_t bits = splitmix64(splitmix64(seed) ^ fnv1a(event_id));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

SelectionDecision select_for_prompt(const PhysiologicalEvent& event, const PercentileBands& bands,
                                    const SamplingPolicy& policy, std::uint64_t seed,
                                    const BandUsage* usage_today) {
    SelectionDecision d;
    d.band = bands.band_of(event.score);
    d.probability = policy.probability[static_cast<int>(d.band)];
    d.draw = selection_draw(seed, event.event_id);
    d.selected = d.band == Band::Top ? true : d.draw < d.probability;
    if (d.selected && usage_today != nullptr) {
        if (auto cap = policy.daily_cap(d.band); cap && usage_today->issued[static_cast<int>(d.band)] >= *cap) {
            d.selected = false;
            d.capped = true;
        }
    }
    return d;
}

const char* ingest_status_name(IngestStatus status) noexcept {
    switch (status) {
        case IngestStatus::NotSelected: return "not_selected";
        case IngestStatus::Issued: return "issued";
        case IngestStatus::Suppressed: return "suppressed";
        case IngestStatus::Deferred: return "deferred";
        case IngestStatus::Duplicate: return "duplicate";
    }
    return "not_selected";
}

PromptEngine::PromptEngine(ParticipantId participant, EngineConfig config)
    : participant_(std::move(participant)), config_(std::move(config)) {
    config_.policy.validate();
    if (config_.timing.dispatch_delay_s < 0 || config_.timing.dispatch_delay_s > 60) {
        throw Error(ErrorCode::Validation, "dispatch delay must be within 60 s of event end");
    }
    bands_ = config_.bands.cold_start_defaults;
}

void PromptEngine::insert_history(const PhysiologicalEvent& event) {
    auto pos = std::upper_bound(history_.begin(), history_.end(), event.start,
                                [](Timestamp t, const PhysiologicalEvent& e) { return t < e.start; });
    history_.insert(pos, event);
    index_.emplace(event.event_id, event.start);
}

const PhysiologicalEvent* PromptEngine::find_event(const EventId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    auto lo = std::lower_bound(history_.begin(), history_.end(), it->second,
                               [](const PhysiologicalEvent& e, Timestamp t) { return e.start < t; });
    for (; lo != history_.end() && lo->start == it->second; ++lo) {
        if (lo->event_id == id) return &*lo;
    }
    return nullptr;
}

const PromptTicket* PromptEngine::find_ticket(const EventId& id) const {
    auto it = tickets_.find(id);
    return it == tickets_.end() ? nullptr : &it->second;
}

PercentileBands PromptEngine::bands_for_day(std::int64_t day) {
    if (!bands_day_ || *bands_day_ != day) {
        bands_ = update_percentiles(participant_, history_, day, config_.bands, private_ids_);
        bands_day_ = day;
    }
    return bands_;
}

BandUsage PromptEngine::usage_on(std::int64_t day) const {
    auto it = usage_.find(day);
    return it == usage_.end() ? BandUsage{} : it->second;
}

std::optional<PromptTicket> PromptEngine::issue_prompt(const PhysiologicalEvent& event, Band band) {
    if (tickets_.count(event.event_id)) {
        throw Error(ErrorCode::Conflict, "a prompt was already issued for event " + event.event_id);
    }
    const Timestamp issued_at = event.end + config_.timing.dispatch_delay_s;
    if (last_issued_ && issued_at >= *last_issued_ && issued_at - *last_issued_ < config_.timing.refractory_s) {
        return std::nullopt;
    }
    PromptTicket t;
    t.event_id = event.event_id;
    t.participant_id = participant_;
    t.issued_at = issued_at;
    t.expires_at = issued_at + config_.timing.expiry_s;
    t.band = band;
    t.tz_offset_min = event.tz_offset_min;
    tickets_.emplace(t.event_id, t);
    usage_[local_day(issued_at, event.tz_offset_min)].issued[static_cast<int>(band)] += 1;
    last_issued_ = std::max(last_issued_.value_or(issued_at), issued_at);
    return t;
}

IngestResult PromptEngine::ingest(const PhysiologicalEvent& event, Timestamp now) {
    event.validate();
    if (event.participant_id != participant_) {
        throw Error(ErrorCode::Validation, "event belongs to another participant");
    }
    IngestResult result;
    if (index_.count(event.event_id)) {
        result.status = IngestStatus::Duplicate;
        if (auto* t = find_ticket(event.event_id)) result.ticket = *t;
        return result;
    }
    const PercentileBands bands = bands_for_day(local_day(event.start, event.tz_offset_min));
    insert_history(event);

    const Timestamp issue_time = event.end + config_.timing.dispatch_delay_s;
    const BandUsage usage = usage_on(local_day(issue_time, event.tz_offset_min));
    result.decision = select_for_prompt(event, bands, config_.policy, config_.seed,
                                        config_.policy.budgets_enabled ? &usage : nullptr);
    if (!result.decision.selected) {
        result.status = IngestStatus::NotSelected;
        return result;
    }
    if (now < event.end) {
        held_.emplace_back(event, result.decision.band);
        result.status = IngestStatus::Deferred;
        return result;
    }
    result.ticket = issue_prompt(event, result.decision.band);
    result.status = result.ticket ? IngestStatus::Issued : IngestStatus::Suppressed;
    return result;
}

std::vector<IngestResult> PromptEngine::poll(Timestamp now) {
    std::vector<IngestResult> out;
    std::stable_sort(held_.begin(), held_.end(),
                     [](const auto& a, const auto& b) { return a.first.end < b.first.end; });
    auto it = held_.begin();
    for (; it != held_.end() && it->first.end <= now; ++it) {
        IngestResult r;
        r.decision.selected = true;
        r.decision.band = it->second;
        // Budgets may have filled while the event was still running.
        const BandUsage usage = usage_on(local_day(it->first.end + config_.timing.dispatch_delay_s,
                                                   it->first.tz_offset_min));
        auto cap = config_.policy.daily_cap(it->second);
        if (cap && usage.issued[static_cast<int>(it->second)] >= *cap) {
            r.decision.selected = false;
            r.decision.capped = true;
            r.status = IngestStatus::NotSelected;
        } else {
            r.ticket = issue_prompt(it->first, it->second);
            r.status = r.ticket ? IngestStatus::Issued : IngestStatus::Suppressed;
        }
        out.push_back(std::move(r));
    }
    held_.erase(held_.begin(), it);
    return out;
}

std::vector<PromptTicket> PromptEngine::pending(Timestamp now) const {
    std::vector<PromptTicket> out;
    for (const auto& [id, t] : tickets_) {
        if (!t.responded && !t.expired_at(now) && t.issued_at <= now) out.push_back(t);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.issued_at < b.issued_at; });
    return out;
}

PromptTicket PromptEngine::mark_responded(const EventId& id) {
    auto it = tickets_.find(id);
    if (it == tickets_.end()) throw Error(ErrorCode::NotFound, "no prompt for event " + id);
    if (!it->second.responded) {
        it->second.responded = true;
        it->second.revision += 1;
    }
    return it->second;
}

void PromptEngine::set_private(const EventId& id, bool is_private) {
    if (is_private) private_ids_.insert(id);
    else private_ids_.erase(id);
}

void PromptEngine::add_manual_event(const PhysiologicalEvent& event) {
    event.validate();
    if (index_.count(event.event_id)) throw Error(ErrorCode::Conflict, "duplicate event " + event.event_id);
    insert_history(event);
}

void PromptEngine::restore(std::vector<PhysiologicalEvent> events, std::vector<PromptTicket> tickets,
                           std::set<EventId> private_ids) {
    history_.clear();
    index_.clear();
    tickets_.clear();
    usage_.clear();
    held_.clear();
    last_issued_.reset();
    bands_day_.reset();
    private_ids_ = std::move(private_ids);
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    for (auto& e : events) {
        index_.emplace(e.event_id, e.start);
        history_.push_back(std::move(e));
    }
    for (auto& t : tickets) {
        usage_[local_day(t.issued_at, t.tz_offset_min)].issued[static_cast<int>(t.band)] += 1;
        last_issued_ = std::max(last_issued_.value_or(t.issued_at), t.issued_at);
        tickets_.emplace(t.event_id, std::move(t));
    }
}

}  // namespace moods::events
