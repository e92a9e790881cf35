#include <doctest.h>

#include <filesystem>
#include <thread>

#include <httplib.h>

#include "moods/gateway/http_api.hpp"
#include "moods/gateway/platform.hpp"
#include "moods/gateway/replay.hpp"

using namespace moods;
using namespace moods::gateway;
namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kEnroll = 19000;
const Timestamp kMorning = local_midnight(kEnroll, 0) + 9 * kSecondsPerHour;

struct Fixture {
    ManualClock clock{kMorning};
    PlatformConfig pc;
    std::unique_ptr<Platform> platform;
    std::unique_ptr<ApiHandler> api;

    explicit Fixture(std::optional<fs::path> dir = std::nullopt) {
        pc.data_dir = dir;
        platform = std::make_unique<Platform>(pc, clock.as_clock());
        ApiConfig ac;
        ac.dev_tokens = true;
        ac.tokens["secret-p1"] = "P001";
        api = std::make_unique<ApiHandler>(*platform, ac);
    }

    ApiResponse call(const std::string& who, const std::string& method, const std::string& path, const json& body = nullptr,
                     std::map<std::string, std::string> query = {}, std::string request_id = {}) {
        ApiRequest r;
        r.method = method;
        r.path = path;
        r.query = std::move(query);
        r.headers["authorization"] = "Bearer " + who;
        if (!request_id.empty()) r.headers["x-request-id"] = request_id;
        if (!body.is_null()) r.body = body.dump();
        return api->handle(r);
    }

    json event(const std::string& id, Timestamp start, double score = 99) const {
        return json{{"event_id", id}, {"start", start}, {"end", start + 600}, {"score", score},
                    {"location", {{"lat", 40.0}, {"lon", -83.0}}}};
    }
};

}  // namespace

TEST_CASE("auth and unknown routes") {
    Fixture f;
    CHECK(f.call("nope", "GET", "/v1/dashboard").status == 401);
    ApiRequest bare{"GET", "/v1/dashboard", {}, {}, {}};
    CHECK(f.api->handle(bare).status == 401);
    CHECK(f.call("dev-P001", "GET", "/v2/whatever").status == 404);
    CHECK(f.call("dev-P001", "DELETE", "/v1/events").status == 404);
    const auto bad = f.call("dev-P001", "POST", "/v1/events", json{{"event_id", "x"}});
    CHECK(bad.status == 400);
    CHECK(bad.body["code"] == "validation");
    CHECK(http_status(ErrorCode::Precondition) == 412);
    CHECK(http_status(ErrorCode::InsufficientData) == 422);
}

TEST_CASE("prompt, rating and stressor flow over the api") {
    Fixture f;
    const Timestamp start = kMorning;
    f.clock.set(start + 600);
    auto r = f.call("dev-P001", "POST", "/v1/events", f.event("P001-e1", start));
    REQUIRE(r.status == 201);
    CHECK(r.body["enrolled"] == true);
    CHECK(r.body["status"] == "issued");
    CHECK(f.call("dev-P001", "POST", "/v1/events", f.event("P001-e1", start)).status == 200);

    auto pending = f.call("secret-p1", "GET", "/v1/prompts/pending");
    REQUIRE(pending.status == 200);
    CHECK(pending.body["tickets"].size() == 1);

    // another participant's token cannot rate it
    CHECK(f.call("dev-P002", "POST", "/v1/ratings", json{{"event_id", "P001-e1"}, {"rating", "stressed"}}).status == 404);

    r = f.call("dev-P001", "POST", "/v1/ratings", json{{"event_id", "P001-e1"}, {"rating", "stressed"}});
    REQUIRE(r.status == 201);
    CHECK_FALSE(r.body["task"].is_null());
    // completion before a task exists is a precondition failure elsewhere
    CHECK(f.call("dev-P001", "POST", "/v1/annotations", json{{"event_id", "P001-e9"}, {"stressor_text", "x"}}).status == 412);

    auto ac = f.call("dev-P001", "GET", "/v1/autocomplete", nullptr, {{"q", "tra"}});
    REQUIRE(ac.status == 200);
    CHECK(ac.body["suggestions"][0] == "traffic/transportation");

    f.clock.advance(90);
    r = f.call("dev-P001", "POST", "/v1/annotations",
               json{{"event_id", "P001-e1"}, {"stressor_text", "Traffic/Transportation"}, {"semantic_location", "car"}});
    REQUIRE(r.status == 200);
    CHECK(r.body["stressor_text"] == "traffic/transportation");
    CHECK(r.body["entry_duration_s"] == 90);

    r = f.call("dev-P001", "PATCH", "/v1/annotations/P001-e1", json{{"is_private", true}});
    CHECK(r.status == 200);
    CHECK(r.body["is_private"] == true);
    CHECK(f.call("dev-P001", "PATCH", "/v1/annotations/none", json{{"is_private", true}}).status == 404);

    const auto dash = f.call("dev-P001", "GET", "/v1/dashboard");
    CHECK(dash.status == 200);
}

TEST_CASE("expired prompt returns 410") {
    Fixture f;
    f.clock.set(kMorning + 600);
    REQUIRE(f.call("dev-P001", "POST", "/v1/events", f.event("P001-e1", kMorning)).status == 201);
    f.clock.advance(2 * kSecondsPerDay);
    const auto r = f.call("dev-P001", "POST", "/v1/ratings", json{{"event_id", "P001-e1"}, {"rating", "unsure"}});
    CHECK(r.status == 410);
    CHECK(r.body["code"] == "expired");
}

TEST_CASE("idempotent retries") {
    Fixture f;
    f.clock.set(kMorning + 600);
    f.call("dev-P001", "POST", "/v1/events", f.event("P001-e1", kMorning));
    f.clock.set(kMorning + 7200);
    const json body{{"rating", "stressed"}, {"stressor_text", "work"}, {"at", kMorning + 3600}};
    const auto a = f.call("dev-P001", "POST", "/v1/annotations/manual", body, {}, "req-1");
    const auto b = f.call("dev-P001", "POST", "/v1/annotations/manual", body, {}, "req-1");
    REQUIRE(a.status == 201);
    CHECK(b.status == 201);
    CHECK(a.body == b.body);
    const auto c = f.call("dev-P001", "POST", "/v1/annotations/manual", body, {}, "req-2");
    CHECK(c.body["event"]["event_id"] != a.body["event"]["event_id"]);
    CHECK(f.call("dev-P001", "POST", "/v1/annotations/manual", json{{"rating", "not_stressed"}, {"stressor_text", "x"}, {"at", kMorning}}).status == 400);
}

TEST_CASE("visualizations and surveys") {
    Fixture f;
    f.clock.set(kMorning + 600);
    f.call("dev-P001", "POST", "/v1/events", f.event("P001-e1", kMorning));
    auto v = f.call("dev-P001", "GET", "/v1/visualizations/1");
    REQUIRE(v.status == 200);
    CHECK(v.body["charts"].size() == 2);
    CHECK(v.body["manifest"]["charts"].size() == 2);
    CHECK(f.call("dev-P001", "GET", "/v1/visualizations/14").body["charts"].size() == 16);
    CHECK(f.call("dev-P001", "GET", "/v1/visualizations/0").status == 400);
    CHECK(f.call("dev-P009", "GET", "/v1/visualizations/1").status == 404);

    // nothing due on day 0
    CHECK(f.call("dev-P001", "GET", "/v1/surveys/current").status == 412);
    f.clock.set(local_midnight(kEnroll + 10, 0) + 9 * kSecondsPerHour);
    const auto cur = f.call("dev-P001", "GET", "/v1/surveys/current");
    REQUIRE(cur.status == 200);
    CHECK(cur.body["week_index"] == 1);
    const auto sub = f.call("dev-P001", "POST", "/v1/surveys",
                            json{{"frequency_choice", "More than once but at most twice"}, {"recall_ease", 4}, {"viz_impacts", {"awareness"}}});
    CHECK(sub.status == 201);
    CHECK(sub.body["week_index"] == 1);
    CHECK(f.call("dev-P001", "POST", "/v1/surveys", json{{"week_index", 1}, {"frequency_value", 2}, {"recall_ease", 4}}).status == 409);
}

TEST_CASE("report access") {
    Fixture f;
    CHECK(f.call("dev-P001", "GET", "/v1/reports/lmm").status == 401);
    // nothing to analyse yet
    CHECK(f.call("dev-analyst", "GET", "/v1/reports/retention").status == 422);
    f.platform->enroll("P001", kEnroll, 0);
    f.platform->enroll("P002", kEnroll, 0);
    const auto r = f.call("dev-analyst", "GET", "/v1/reports/retention");
    CHECK(r.status == 200);
    CHECK(f.call("dev-analyst", "GET", "/v1/reports/bogus").status == 404);
}

TEST_CASE("platform state survives a restart") {
    const auto dir = fs::temp_directory_path() / "moods_gateway_restart";
    fs::remove_all(dir);
    json before;
    {
        Fixture f(dir);
        f.clock.set(kMorning + 600);
        f.call("dev-P001", "POST", "/v1/events", f.event("P001-e1", kMorning));
        f.call("dev-P001", "POST", "/v1/ratings", json{{"event_id", "P001-e1"}, {"rating", "stressed"}});
        f.call("dev-P001", "POST", "/v1/annotations", json{{"event_id", "P001-e1"}, {"stressor_text", "deadline"}});
        before = f.call("dev-P001", "GET", "/v1/dashboard").body;
    }
    before.erase("now");
    Fixture g(dir);
    CHECK(g.platform->enrolled("P001"));
    auto after = g.call("dev-P001", "GET", "/v1/dashboard").body;
    after.erase("now");
    CHECK(after == before);
    CHECK(g.call("dev-P001", "GET", "/v1/autocomplete", nullptr, {{"q", "dead"}}).body["suggestions"][0] == "deadline");
    // the restored engine still knows the event
    g.clock.set(kMorning + 700);
    CHECK(g.call("dev-P001", "POST", "/v1/events", g.event("P001-e1", kMorning)).status == 200);
    fs::remove_all(dir);
}

TEST_CASE("live http server") {
    Fixture f;
    HttpServer server(*f.api);
    const int port = server.bind_any("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen(); });
    httplib::Client cli("127.0.0.1", port);
    httplib::Headers h{{"Authorization", "Bearer dev-P001"}};
    f.clock.set(kMorning + 600);
    auto res = cli.Post("/v1/events", h, f.event("P001-e1", kMorning).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    res = cli.Get("/v1/autocomplete?q=tra", h);
    REQUIRE(res);
    CHECK(json::parse(res->body)["suggestions"][0] == "traffic/transportation");
    res = cli.Get("/v1/visualizations/1", h);
    REQUIRE(res);
    CHECK(json::parse(res->body)["charts"].size() == 2);
    res = cli.Get("/v1/dashboard");
    REQUIRE(res);
    CHECK(res->status == 401);
    server.stop();
    t.join();
}

TEST_CASE("small replay reproduces the simulation through the api") {
    sim::SimConfig cfg;
    cfg.n_participants = 5;
    cfg.n_weeks = 4;
    cfg.seed = 99;
    ReplayOptions ro;
    ro.report.bootstrap_resamples = 0;
    const auto res = replay_study(cfg, ro);
    CHECK(res.stats.failures == 0);
    CHECK(res.stats.ticket_mismatches == 0);
    CHECK(res.stats.bundles == 20);
    CHECK(res.report["schema"] == "moods.report/1");
    CHECK(res.report.contains("trends"));
}
