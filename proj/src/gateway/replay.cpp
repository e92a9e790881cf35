#include "moods/gateway/replay.hpp"

#include <chrono>
#include <fstream>

namespace moods::gateway {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string two_digits(int w) {
    return (w < 10 ? "0" : "") + std::to_string(w);
}

}  // namespace

ReplayResult replay_study(const sim::SimConfig& config, const ReplayOptions& options) {
    ReplayResult out;
    out.dataset = sim::simulate(config);
    const auto& data = out.dataset;
    auto& st = out.stats;

    PlatformConfig pc;
    pc.engine = config.engine;
    pc.store.flush_each_append = false;
    if (options.out_dir && options.persist) {
        const auto dir = *options.out_dir / "data";
        if (std::filesystem::exists(dir) && !std::filesystem::is_empty(dir)) {
            throw Error(ErrorCode::Conflict, dir.string() + " already holds data; choose a fresh output directory");
        }
        pc.data_dir = dir;
    }
    ManualClock clock(0);
    Platform platform(pc, clock.as_clock());
    ApiConfig ac;
    ac.dev_tokens = true;
    ApiHandler api(platform, ac);

    for (const auto& p : data.participants) platform.enroll(p.participant_id, p.enrollment_day, p.tz_offset_min);

    std::set<EventId> simulated_tickets;
    for (const auto& t : data.tickets) simulated_tickets.insert(t.event_id);
    std::map<EventId, const PhysiologicalEvent*> manual_events;
    for (const auto& e : data.manual_events) manual_events[e.event_id] = &e;

    auto call = [&](const std::string& pid, std::string method, std::string path, const json& body) {
        ApiRequest r;
        r.method = std::move(method);
        r.path = std::move(path);
        r.headers["authorization"] = "Bearer dev-" + pid;
        if (!body.is_null()) r.body = body.dump();
        auto resp = api.handle(r);
        ++st.requests;
        ++st.statuses[resp.status];
        return resp;
    };
    auto expect = [&](const ApiResponse& r, int status) {
        if (r.status != status) ++st.failures;
    };

    const auto t_ingest = std::chrono::steady_clock::now();
    for (const auto& act : data.timeline()) {
        clock.set(act.at);
        ++st.actions;
        const auto& pid = act.participant_id;
        switch (act.kind) {
            case sim::ActionKind::Event: {
                const auto& e = data.events[act.index];
                const auto r = call(pid, "POST", "/v1/events", json(e));
                expect(r, 201);
                const bool issued = r.status == 201 && !r.body["ticket"].is_null();
                if (issued != (simulated_tickets.count(e.event_id) > 0)) ++st.ticket_mismatches;
                break;
            }
            case sim::ActionKind::Rating: {
                const auto& a = data.annotations[act.index];
                expect(call(pid, "POST", "/v1/ratings",
                            json{{"event_id", a.event_id}, {"rating", rating_name(a.rating)}}),
                       201);
                break;
            }
            case sim::ActionKind::Completion: {
                const auto& a = data.annotations[act.index];
                json body{{"event_id", a.event_id}, {"stressor_text", *a.stressor_text}};
                if (a.semantic_location) body["semantic_location"] = *a.semantic_location;
                if (a.gps) body["gps"] = *a.gps;
                expect(call(pid, "POST", "/v1/annotations", body), 200);
                break;
            }
            case sim::ActionKind::MakePrivate: {
                const auto& a = data.annotations[act.index];
                expect(call(pid, "PATCH", "/v1/annotations/" + a.event_id, json{{"is_private", true}}), 200);
                break;
            }
            case sim::ActionKind::Manual: {
                const auto& a = data.annotations[act.index];
                const auto* e = manual_events.at(a.event_id);
                json body{{"rating", rating_name(a.rating)}, {"stressor_text", *a.stressor_text}, {"at", e->start},
                          {"duration_s", e->end - e->start}};
                if (a.semantic_location) body["semantic_location"] = *a.semantic_location;
                if (a.gps) body["gps"] = *a.gps;
                const auto r = call(pid, "POST", "/v1/annotations/manual", body);
                expect(r, 201);
                if (r.status == 201 && r.body["event"]["event_id"] != a.event_id) ++st.failures;
                break;
            }
            case sim::ActionKind::Survey: {
                const auto& s = data.surveys[act.index];
                const auto cur = call(pid, "GET", "/v1/surveys/current", nullptr);
                expect(cur, 200);
                if (cur.status == 200 && cur.body["week_index"] != s.week_index) ++st.failures;
                json body = s;
                body.erase("submitted_at");
                body.erase("late");
                expect(call(pid, "POST", "/v1/surveys", body), 201);
                break;
            }
        }
    }
    st.seconds_ingest = seconds_since(t_ingest);

    const auto t_bundles = std::chrono::steady_clock::now();
    const int stride = std::max(1, options.bundle_stride);
    for (const auto& p : data.participants) {
        const auto vd = platform.viz_dataset(p.participant_id);
        for (int w = 1; w <= config.n_weeks; ++w) {
            if ((w - 1) % stride != 0 && w != config.n_weeks) continue;
            const auto bundle = viz::assemble_bundle(vd, w);
            ++st.bundles;
            if (options.out_dir && options.write_bundles) {
                viz::write_bundle(bundle, *options.out_dir / "bundles" / p.participant_id / ("week_" + two_digits(w)));
            }
        }
    }
    st.seconds_bundles = seconds_since(t_bundles);

    const auto t_analysis = std::chrono::steady_clock::now();
    out.report = analysis::full_report(platform.study_data(), options.report);
    st.seconds_analysis = seconds_since(t_analysis);
    out.report["replay"] = to_json(st);
    const auto& tg = options.targets;
    out.report["targets"] = json{{"intensity_slope", tg.intensity_slope},
                                 {"frequency_slope", tg.frequency_slope},
                                 {"response_rate", tg.response_rate},
                                 {"day30_survival", tg.day30_survival}};

    if (options.out_dir) {
        if (options.persist) platform.snapshot_all();
        std::filesystem::create_directories(*options.out_dir);
        std::ofstream f(*options.out_dir / "report.json", std::ios::trunc);
        f << out.report.dump(2) << '\n';
    }
    return out;
}

json to_json(const ReplayStats& s) {
    json statuses = json::object();
    for (const auto& [code, n] : s.statuses) statuses[std::to_string(code)] = n;
    return json{{"actions", s.actions},
                {"requests", s.requests},
                {"statuses", statuses},
                {"failures", s.failures},
                {"ticket_mismatches", s.ticket_mismatches},
                {"bundles", s.bundles},
                {"seconds_ingest", s.seconds_ingest},
                {"seconds_bundles", s.seconds_bundles},
                {"seconds_analysis", s.seconds_analysis}};
}

}  // namespace moods::gateway
