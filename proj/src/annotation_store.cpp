#include "moods/annotation_store.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>

namespace moods::annotations {

std::string normalize_stressor(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
    return out;
}

const std::vector<std::string>& default_seed_stressors() {
    static const std::vector<std::string> seed = [] {
        std::vector<std::string> v = {
#include "seed_stressors.inc"
        };
        return v;
    }();
    return seed;
}

std::vector<std::string> load_seed_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open seed file " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto norm = normalize_stressor(line);
        if (norm.empty() || norm.front() == '#') continue;
        out.push_back(norm);
    }
    return out;
}

const LexiconEntry* LexiconSnapshot::find(std::string_view normalized) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), normalized,
                               [](const LexiconEntry& e, std::string_view t) { return e.text < t; });
    return (it != entries.end() && it->text == normalized) ? &*it : nullptr;
}

std::vector<std::string> autocomplete(const LexiconSnapshot& lexicon, std::string_view query,
                                      std::size_t limit) {
    if (limit == 0) throw Error(ErrorCode::Validation, "limit must be >= 1");
    const std::string q = normalize_stressor(query);
    struct Hit {
        bool prefix;
        std::uint64_t uses;
        const std::string* text;
    };
    std::vector<Hit> hits;
    for (const auto& e : lexicon.entries) {
        const auto pos = e.text.find(q);
        if (pos == std::string::npos) continue;
        hits.push_back({pos == 0, e.use_count, &e.text});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.prefix != b.prefix) return a.prefix;
        if (a.uses != b.uses) return a.uses > b.uses;
        return *a.text < *b.text;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < hits.size() && i < limit; ++i) out.push_back(*hits[i].text);
    return out;
}

StressorLexicon::StressorLexicon(std::span<const std::string> seed) {
    std::vector<LexiconEntry> entries;
    for (const auto& s : seed) {
        auto norm = normalize_stressor(s);
        if (norm.empty()) continue;
        entries.push_back({std::move(norm), 0, 0, true});
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.text < b.text; });
    entries.erase(std::unique(entries.begin(), entries.end(),
                              [](const auto& a, const auto& b) { return a.text == b.text; }),
                  entries.end());
    publish(std::move(entries));
}

std::shared_ptr<const LexiconSnapshot> StressorLexicon::snapshot() const { return std::atomic_load(&current_); }

void StressorLexicon::publish(std::vector<LexiconEntry> entries) {
    auto snap = std::make_shared<LexiconSnapshot>();
    snap->entries = std::move(entries);
    std::atomic_store(&current_, std::shared_ptr<const LexiconSnapshot>(std::move(snap)));
}

LexiconEntry StressorLexicon::upsert(std::string_view text, Timestamp at) {
    const std::string norm = normalize_stressor(text);
    if (norm.empty()) throw Error(ErrorCode::Validation, "stressor text is empty");
    auto entries = snapshot()->entries;
    auto it = std::lower_bound(entries.begin(), entries.end(), norm,
                               [](const LexiconEntry& e, const std::string& t) { return e.text < t; });
    if (it == entries.end() || it->text != norm) it = entries.insert(it, LexiconEntry{norm, at, 0, false});
    it->use_count += 1;
    LexiconEntry updated = *it;
    publish(std::move(entries));
    return updated;
}

void StressorLexicon::restore_entry(const LexiconEntry& entry) {
    auto entries = snapshot()->entries;
    auto it = std::lower_bound(entries.begin(), entries.end(), entry.text,
                               [](const LexiconEntry& e, const std::string& t) { return e.text < t; });
    if (it != entries.end() && it->text == entry.text) *it = entry;
    else entries.insert(it, entry);
    publish(std::move(entries));
}

EventContext make_event_context(const PhysiologicalEvent& event) {
    EventContext c;
    c.date = format_date(local_day(event.start, event.tz_offset_min));
    c.start_time = format_clock(event.start, event.tz_offset_min);
    c.duration_min = event.duration_min();
    c.score = event.score;
    c.location = event.location;
    return c;
}

AnnotationStore::AnnotationStore(ParticipantId participant, std::span<const std::string> seed,
                                 AnnotationConfig config)
    : participant_(std::move(participant)), config_(config), lexicon_(seed) {}

RatingOutcome AnnotationStore::submit_rating(const events::PromptTicket& ticket, const PhysiologicalEvent& event,
                                             StressRating rating, Timestamp now) {
    lexicon_writes_.clear();
    if (ticket.participant_id != participant_ || ticket.event_id != event.event_id) {
        throw Error(ErrorCode::Validation, "ticket does not match this participant's event");
    }
    if (auto it = annotations_.find(event.event_id); it != annotations_.end()) {
        RatingOutcome dup{it->second, std::nullopt, true};
        if (auto t = tasks_.find(event.event_id); t != tasks_.end() && !t->second.closed) dup.task = t->second;
        return dup;
    }
    if (ticket.expired_at(now)) throw Error(ErrorCode::Expired, "prompt for event " + event.event_id + " expired");

    StressAnnotation a;
    a.event_id = event.event_id;
    a.participant_id = participant_;
    a.rating = rating;
    a.created_at = now;
    annotations_.emplace(a.event_id, a);

    RatingOutcome out{a, std::nullopt, false};
    if (requires_stressor(rating)) {
        StressorTask task{event.event_id, now, make_event_context(event), false};
        tasks_[event.event_id] = task;
        out.task = task;
    }
    return out;
}

std::vector<std::string> AnnotationStore::autocomplete(std::string_view query, std::size_t limit) const {
    return annotations::autocomplete(*lexicon_.snapshot(), query, limit);
}

StressAnnotation AnnotationStore::complete_annotation(const EventId& event_id, std::string_view stressor_text,
                                                      std::optional<std::string> semantic_location,
                                                      std::optional<GeoPoint> gps, Timestamp now) {
    lexicon_writes_.clear();
    auto t = tasks_.find(event_id);
    if (t == tasks_.end() || t->second.closed) {
        throw Error(ErrorCode::Precondition, "no open stressor task for event " + event_id);
    }
    const std::string norm = normalize_stressor(stressor_text);
    if (norm.empty()) throw Error(ErrorCode::Validation, "stressor_text is required");

    auto& a = annotations_.at(event_id);
    a.stressor_text = norm;
    if (semantic_location) {
        auto loc = normalize_stressor(*semantic_location);
        if (!loc.empty()) a.semantic_location = std::move(loc);
    }
    a.gps = gps ? gps : t->second.context.location;
    a.entry_duration_s = std::max<Timestamp>(0, now - t->second.opened_at);
    a.revision += 1;
    t->second.closed = true;
    lexicon_writes_.push_back(lexicon_.upsert(norm, now));
    return a;
}

StressAnnotation AnnotationStore::edit_annotation(const EventId& event_id, const AnnotationPatch& patch,
                                                  Timestamp now) {
    lexicon_writes_.clear();
    auto it = annotations_.find(event_id);
    if (it == annotations_.end()) throw Error(ErrorCode::NotFound, "no annotation for event " + event_id);
    if (patch.empty()) return it->second;

    StressAnnotation next = it->second;
    if (patch.rating) next.rating = *patch.rating;
    if (patch.stressor_text) {
        const auto norm = normalize_stressor(*patch.stressor_text);
        if (norm.empty()) throw Error(ErrorCode::Validation, "stressor_text cannot be emptied");
        if (!next.stressor_text || *next.stressor_text != norm) {
            next.stressor_text = norm;
            lexicon_writes_.push_back(lexicon_.upsert(norm, now));
        }
    }
    if (patch.is_private) next.is_private = *patch.is_private;
    next.edited_at = std::max(now, next.created_at);
    next.revision += 1;
    it->second = next;
    return next;
}

ManualReport AnnotationStore::manual_report(StressRating rating, std::string_view stressor_text,
                                            std::optional<std::string> semantic_location, Timestamp at,
                                            Timestamp now, int tz_offset_min, std::optional<Timestamp> duration_s,
                                            std::optional<GeoPoint> gps) {
    lexicon_writes_.clear();
    if (at > now) throw Error(ErrorCode::Validation, "manual report cannot be in the future");
    if (!requires_stressor(rating)) {
        throw Error(ErrorCode::Validation, "manual reports must describe a stress event");
    }
    const std::string norm = normalize_stressor(stressor_text);
    if (norm.empty()) throw Error(ErrorCode::Validation, "stressor_text is required");
    const Timestamp dur = duration_s.value_or(config_.manual_default_duration_s);
    if (dur <= 0) throw Error(ErrorCode::Validation, "duration must be positive");

    ManualReport r;
    r.event.event_id = "manual-" + participant_ + "-" + std::to_string(at) + "-" + std::to_string(++manual_seq_);
    while (annotations_.count(r.event.event_id)) {
        r.event.event_id = "manual-" + participant_ + "-" + std::to_string(at) + "-" + std::to_string(++manual_seq_);
    }
    r.event.participant_id = participant_;
    r.event.start = at;
    r.event.end = at + dur;
    r.event.score = 0.0;
    r.event.tz_offset_min = tz_offset_min;
    r.event.source = EventSource::Manual;
    r.event.location = gps;

    auto& a = r.annotation;
    a.event_id = r.event.event_id;
    a.participant_id = participant_;
    a.rating = rating;
    a.stressor_text = norm;
    if (semantic_location) {
        auto loc = normalize_stressor(*semantic_location);
        if (!loc.empty()) a.semantic_location = std::move(loc);
    }
    a.gps = gps;
    a.is_manual = true;
    a.created_at = now;
    annotations_.emplace(a.event_id, a);
    lexicon_writes_.push_back(lexicon_.upsert(norm, now));
    return r;
}

const StressAnnotation* AnnotationStore::find(const EventId& event_id) const {
    auto it = annotations_.find(event_id);
    return it == annotations_.end() ? nullptr : &it->second;
}

const StressorTask* AnnotationStore::open_task(const EventId& event_id) const {
    auto it = tasks_.find(event_id);
    return (it == tasks_.end() || it->second.closed) ? nullptr : &it->second;
}

std::vector<std::int64_t> AnnotationStore::entry_durations() const {
    std::vector<std::pair<Timestamp, std::int64_t>> done;
    for (const auto& [id, a] : annotations_) {
        if (a.entry_duration_s) done.emplace_back(a.created_at + *a.entry_duration_s, *a.entry_duration_s);
    }
    std::sort(done.begin(), done.end());
    std::vector<std::int64_t> out;
    out.reserve(done.size());
    for (const auto& [t, d] : done) out.push_back(d);
    return out;
}

void AnnotationStore::restore(std::vector<StressAnnotation> annotations, std::vector<StressorTask> tasks,
                              std::vector<LexiconEntry> lexicon_entries) {
    annotations_.clear();
    tasks_.clear();
    manual_seq_ = 0;
    for (auto& a : annotations) {
        if (a.is_manual) ++manual_seq_;
        annotations_[a.event_id] = std::move(a);
    }
    for (auto& t : tasks) tasks_[t.event_id] = std::move(t);
    for (const auto& e : lexicon_entries) lexicon_.restore_entry(e);
}

}  // namespace moods::annotations
