#include "moods/gateway/platform.hpp"

#include <chrono>

namespace moods::gateway {

Timestamp system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

struct Platform::Runtime {
    Runtime(const PlatformConfig& cfg, storage::ParticipantRecord rec, storage::ParticipantStore* store)
        : info(rec),
          engine(rec.participant_id, cfg.engine),
          annotations(rec.participant_id, annotations::default_seed_stressors(), cfg.annotation),
          surveys(StudyClock{rec.participant_id, rec.enrollment_day}, cfg.survey),
          log(store) {
        surveys.set_tz_offset(rec.tz_offset_min);
    }

    std::mutex mu;
    storage::ParticipantRecord info;
    events::PromptEngine engine;
    annotations::AnnotationStore annotations;
    surveys::SurveyEngine surveys;
    storage::ParticipantStore* log = nullptr;

    void persist_lexicon() {
        if (!log) return;
        for (const auto& e : annotations.last_lexicon_writes()) log->put_lexicon(e);
    }

    // Issues any held prompts that have concluded by now.
    void poll(Timestamp now) {
        for (const auto& r : engine.poll(now)) {
            if (r.ticket && log) log->put_ticket(*r.ticket);
        }
    }

    void note_tz(int tz) {
        if (tz == info.tz_offset_min) return;
        info.tz_offset_min = tz;
        surveys.set_tz_offset(tz);
        if (log) log->put_participant(info);
    }
};

Platform::Platform(PlatformConfig config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {
    config_.engine.policy.validate();
    if (config_.data_dir) {
        store_ = std::make_unique<storage::Store>(*config_.data_dir, config_.store);
        restore_all();
    }
}

Platform::~Platform() = default;

void Platform::restore_all() {
    for (const auto& pid : store_->participants()) {
        auto& ps = store_->open(pid);
        const auto st = ps.state();
        if (!st->participant) continue;
        auto rt = std::make_unique<Runtime>(config_, *st->participant, &ps);
        std::vector<PhysiologicalEvent> evs;
        std::set<EventId> priv;
        for (const auto& [id, e] : st->events) evs.push_back(e);
        std::vector<events::PromptTicket> tickets;
        for (const auto& [id, t] : st->tickets) tickets.push_back(t);
        std::vector<StressAnnotation> anns;
        for (const auto& [id, a] : st->annotations) {
            if (a.is_private) priv.insert(id);
            anns.push_back(a);
        }
        std::vector<annotations::StressorTask> tasks;
        for (const auto& [id, t] : st->tasks) tasks.push_back(t);
        std::vector<annotations::LexiconEntry> lex;
        for (const auto& [id, e] : st->lexicon) lex.push_back(e);
        std::vector<surveys::SurveyInstance> inst;
        for (const auto& [w, i] : st->survey_instances) inst.push_back(i);
        std::vector<WeeklySurvey> resp;
        for (const auto& [w, s] : st->surveys) resp.push_back(s);
        rt->engine.restore(std::move(evs), std::move(tickets), std::move(priv));
        rt->annotations.restore(std::move(anns), std::move(tasks), std::move(lex));
        rt->surveys.restore(std::move(inst), std::move(resp));
        runtimes_.emplace(pid, std::move(rt));
    }
}

Platform::Runtime* Platform::find_runtime(const ParticipantId& participant) const {
    std::shared_lock lock(mu_);
    auto it = runtimes_.find(participant);
    return it == runtimes_.end() ? nullptr : it->second.get();
}

Platform::Runtime& Platform::runtime(const ParticipantId& participant) const {
    if (auto* rt = find_runtime(participant)) return *rt;
    throw Error(ErrorCode::NotFound, "unknown participant '" + participant + "'");
}

Platform::Runtime& Platform::create_runtime(const ParticipantId& participant, std::int64_t enrollment_day,
                                            int tz_offset_min) {
    if (participant.empty()) throw Error(ErrorCode::Validation, "participant_id is required");
    std::unique_lock lock(mu_);
    if (auto it = runtimes_.find(participant); it != runtimes_.end()) return *it->second;
    storage::ParticipantStore* ps = store_ ? &store_->open(participant) : nullptr;
    storage::ParticipantRecord rec{participant, enrollment_day, tz_offset_min};
    auto rt = std::make_unique<Runtime>(config_, rec, ps);
    if (ps) ps->put_participant(rec);
    return *runtimes_.emplace(participant, std::move(rt)).first->second;
}

void Platform::enroll(const ParticipantId& participant, std::int64_t enrollment_day, int tz_offset_min) {
    if (auto* rt = find_runtime(participant)) {
        if (rt->info.enrollment_day != enrollment_day) {
            throw Error(ErrorCode::Conflict, "participant '" + participant + "' is enrolled on another day");
        }
        return;
    }
    create_runtime(participant, enrollment_day, tz_offset_min);
}

bool Platform::enrolled(const ParticipantId& participant) const { return find_runtime(participant) != nullptr; }

std::vector<ParticipantId> Platform::participants() const {
    std::shared_lock lock(mu_);
    std::vector<ParticipantId> out;
    for (const auto& [pid, _] : runtimes_) out.push_back(pid);
    return out;
}

EventIngest Platform::ingest_event(const PhysiologicalEvent& event) {
    event.validate();
    if (event.source != EventSource::Detected) {
        throw Error(ErrorCode::Validation, "manual events are reported through the manual annotation route");
    }
    EventIngest out;
    Runtime* rt = find_runtime(event.participant_id);
    if (!rt) {
        rt = &create_runtime(event.participant_id, local_day(event.start, event.tz_offset_min), event.tz_offset_min);
        out.enrolled = true;
    }
    std::lock_guard lock(rt->mu);
    const Timestamp now = clock_();
    rt->note_tz(event.tz_offset_min);
    rt->poll(now);
    out.result = rt->engine.ingest(event, now);
    if (rt->log && out.result.status != events::IngestStatus::Duplicate) {
        rt->log->put_event(event);
        if (out.result.ticket) rt->log->put_ticket(*out.result.ticket);
    }
    return out;
}

std::vector<events::PromptTicket> Platform::pending(const ParticipantId& participant) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    rt.poll(now);
    return rt.engine.pending(now);
}

annotations::RatingOutcome Platform::submit_rating(const ParticipantId& participant, const EventId& event_id,
                                                   StressRating rating) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    rt.poll(now);
    const auto* ticket = rt.engine.find_ticket(event_id);
    if (!ticket) throw Error(ErrorCode::NotFound, "no prompt for event '" + event_id + "'");
    const auto* event = rt.engine.find_event(event_id);
    if (!event) throw Error(ErrorCode::NotFound, "unknown event '" + event_id + "'");
    auto outcome = rt.annotations.submit_rating(*ticket, *event, rating, now);
    if (!outcome.duplicate) {
        const auto updated = rt.engine.mark_responded(event_id);
        if (rt.log) {
            rt.log->put_ticket(updated);
            rt.log->put_annotation(outcome.annotation);
            if (outcome.task) rt.log->put_task(*outcome.task);
        }
    }
    return outcome;
}

std::vector<std::string> Platform::autocomplete(const ParticipantId& participant, std::string_view query,
                                                std::size_t limit) {
    // Reads a lexicon snapshot; no participant lock needed.
    if (auto* rt = find_runtime(participant)) return rt->annotations.autocomplete(query, limit);
    return annotations::autocomplete(*annotations::StressorLexicon().snapshot(), query, limit);
}

StressAnnotation Platform::complete_annotation(const ParticipantId& participant, const EventId& event_id,
                                               std::string_view stressor_text,
                                               std::optional<std::string> semantic_location,
                                               std::optional<GeoPoint> gps) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    auto a = rt.annotations.complete_annotation(event_id, stressor_text, std::move(semantic_location), gps, now);
    if (rt.log) {
        rt.log->put_annotation(a);
        const auto& tasks = rt.annotations.tasks();
        if (auto it = tasks.find(event_id); it != tasks.end()) rt.log->put_task(it->second);
        rt.persist_lexicon();
    }
    return a;
}

StressAnnotation Platform::edit_annotation(const ParticipantId& participant, const EventId& event_id,
                                           const annotations::AnnotationPatch& patch) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    auto a = rt.annotations.edit_annotation(event_id, patch, now);
    if (patch.is_private) rt.engine.set_private(event_id, *patch.is_private);
    if (rt.log) {
        rt.log->put_annotation(a);
        rt.persist_lexicon();
    }
    return a;
}

annotations::ManualReport Platform::manual_report(const ParticipantId& participant, StressRating rating,
                                                  std::string_view stressor_text,
                                                  std::optional<std::string> semantic_location, Timestamp at,
                                                  std::optional<Timestamp> duration_s, std::optional<GeoPoint> gps,
                                                  std::optional<int> tz_offset_min) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    auto r = rt.annotations.manual_report(rating, stressor_text, std::move(semantic_location), at, now,
                                          tz_offset_min.value_or(rt.info.tz_offset_min), duration_s, gps);
    rt.engine.add_manual_event(r.event);
    if (rt.log) {
        rt.log->put_event(r.event);
        rt.log->put_annotation(r.annotation);
        rt.persist_lexicon();
    }
    return r;
}

json Platform::dashboard(const ParticipantId& participant) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    rt.poll(now);
    const StudyClock clock{participant, rt.info.enrollment_day};
    json timeline = json::array();
    std::size_t rated = 0, with_stressor = 0;
    for (const auto& e : rt.engine.events()) {
        json item{{"event", e}};
        if (const auto* t = rt.engine.find_ticket(e.event_id)) item["ticket"] = *t;
        if (const auto* a = rt.annotations.find(e.event_id)) {
            item["annotation"] = *a;
            ++rated;
            if (a->has_stressor()) ++with_stressor;
        }
        item["week_index"] = clock.week_index_at(e.start, e.tz_offset_min);
        timeline.push_back(std::move(item));
    }
    return json{{"participant_id", participant},
                {"enrollment_day", rt.info.enrollment_day},
                {"week_index", clock.week_index_at(now, rt.info.tz_offset_min)},
                {"now", now},
                {"counts", {{"events", rt.engine.events().size()},
                            {"prompts", rt.engine.tickets().size()},
                            {"annotations", rated},
                            {"stressors", with_stressor},
                            {"pending", rt.engine.pending(now).size()}}},
                {"timeline", timeline}};
}

viz::VizDataset Platform::viz_dataset(const ParticipantId& participant) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    viz::VizDataset d;
    d.participant_id = participant;
    d.clock = StudyClock{participant, rt.info.enrollment_day};
    d.events = rt.engine.events();
    for (const auto& [id, a] : rt.annotations.annotations()) d.annotations.push_back(a);
    return d;
}

viz::ChartBundle Platform::visualizations(const ParticipantId& participant, int week_index) {
    if (week_index < 1) throw Error(ErrorCode::Validation, "week must be >= 1");
    return viz::assemble_bundle(viz_dataset(participant), week_index);
}

surveys::SurveyInstance Platform::current_survey(const ParticipantId& participant) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    const int w = rt.surveys.latest_due_week(now);
    if (w == 0) throw Error(ErrorCode::Precondition, "no survey is due yet");
    if (const auto* inst = rt.surveys.instance(w)) return *inst;
    auto inst = rt.surveys.open_survey(w, now);
    if (rt.log) rt.log->put_survey_instance(inst);
    return inst;
}

WeeklySurvey Platform::submit_survey(const ParticipantId& participant, WeeklySurvey survey) {
    auto& rt = runtime(participant);
    std::lock_guard lock(rt.mu);
    const Timestamp now = clock_();
    const int w = survey.week_index > 0 ? survey.week_index : rt.surveys.latest_due_week(now);
    if (w == 0) throw Error(ErrorCode::Precondition, "no survey is due yet");
    auto saved = rt.surveys.submit_survey(w, std::move(survey), now);
    if (rt.log) {
        rt.log->put_survey_instance(*rt.surveys.instance(w));
        rt.log->put_survey(saved);
    }
    return saved;
}

analysis::StudyData Platform::study_data(const std::optional<ParticipantId>& participant) const {
    analysis::StudyData d;
    std::vector<std::pair<ParticipantId, Runtime*>> rts;
    {
        std::shared_lock lock(mu_);
        for (const auto& [pid, rt] : runtimes_) {
            if (!participant || *participant == pid) rts.emplace_back(pid, rt.get());
        }
    }
    if (participant && rts.empty()) throw Error(ErrorCode::NotFound, "unknown participant '" + *participant + "'");
    int max_week = 1;
    for (auto& [pid, rt] : rts) {
        std::lock_guard lock(rt->mu);
        d.participants.push_back({pid, rt->info.enrollment_day, rt->info.tz_offset_min});
        const StudyClock clock{pid, rt->info.enrollment_day};
        for (const auto& e : rt->engine.events()) {
            d.events.push_back(e);
            max_week = std::max(max_week, clock.week_index_at(e.start, e.tz_offset_min));
        }
        for (const auto& [id, t] : rt->engine.tickets()) d.tickets.push_back(t);
        for (const auto& [id, a] : rt->annotations.annotations()) d.annotations.push_back(a);
        for (const auto& [w, s] : rt->surveys.responses()) d.surveys.push_back(s);
    }
    d.n_weeks = max_week;
    return d;
}

void Platform::snapshot_all() {
    if (!store_) return;
    for (const auto& pid : participants()) {
        auto& rt = runtime(pid);
        std::lock_guard lock(rt.mu);
        if (rt.log) rt.log->write_snapshot();
    }
}

}  // namespace moods::gateway
