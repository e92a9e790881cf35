#include "moods/gateway/http_api.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <httplib.h>

namespace moods::gateway {

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        const std::size_t j = path.find('/', i);
        const std::size_t end = j == std::string::npos ? path.size() : j;
        if (end > i) parts.push_back(path.substr(i, end - i));
        i = end;
    }
    return parts;
}

json parse_body(const std::string& body) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    json j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::Validation, "request body must be a JSON object");
    return j;
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::Validation, std::string("bad ") + what + " '" + s + "'");
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

std::optional<GeoPoint> opt_gps(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<GeoPoint>();
}

StressRating rating_field(const json& j) {
    const auto& r = j.at("rating");
    if (r.is_number_integer()) return rating_from_intensity(r.get<int>());
    return parse_rating(r.get<std::string>());
}

json ticket_list(const std::vector<events::PromptTicket>& ts) {
    json a = json::array();
    for (const auto& t : ts) a.push_back(t);
    return a;
}

json decision_json(const events::SelectionDecision& d) {
    return json{{"selected", d.selected}, {"band", events::band_name(d.band)}, {"probability", d.probability},
                {"draw", d.draw}, {"capped", d.capped}};
}

}  // namespace

std::map<std::string, std::string> load_tokens(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open token file " + path.string());
    try {
        json j;
        in >> j;
        return j.get<std::map<std::string, std::string>>();
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::Validation, path.string() + ": " + ex.what());
    }
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Validation: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict: return 409;
        case ErrorCode::Expired: return 410;
        case ErrorCode::Precondition: return 412;
        case ErrorCode::InsufficientData: return 422;
        case ErrorCode::Unauthorized: return 401;
    }
    return 500;
}

json error_body(ErrorCode code, const std::string& message) {
    return json{{"code", error_code_name(code)}, {"message", message}};
}

ApiHandler::ApiHandler(Platform& platform, ApiConfig config) : platform_(platform), config_(std::move(config)) {}

std::string ApiHandler::authorize(const ApiRequest& request) const {
    auto it = request.headers.find("authorization");
    if (it == request.headers.end()) throw Error(ErrorCode::Unauthorized, "missing bearer token");
    const std::string& v = it->second;
    if (v.rfind("Bearer ", 0) != 0) throw Error(ErrorCode::Unauthorized, "expected a bearer token");
    const std::string token = v.substr(7);
    if (auto t = config_.tokens.find(token); t != config_.tokens.end()) return t->second;
    if (config_.dev_tokens && token.rfind("dev-", 0) == 0 && token.size() > 4) {
        const std::string who = token.substr(4);
        return who == "analyst" ? std::string(kAnalystScope) : who;
    }
    throw Error(ErrorCode::Unauthorized, "unknown token");
}

ApiResponse ApiHandler::handle(const ApiRequest& request) {
    std::string scope;
    try {
        scope = authorize(request);
    } catch (const Error& e) {
        return {http_status(e.code()), error_body(e.code(), e.what())};
    }
    const bool mutating = request.method == "POST" || request.method == "PATCH";
    std::string key;
    if (mutating) {
        if (auto it = request.headers.find("x-request-id"); it != request.headers.end() && !it->second.empty()) {
            key = scope + '\n' + request.method + ' ' + request.path + '\n' + it->second;
            std::lock_guard lock(cache_mu_);
            if (auto c = cache_.find(key); c != cache_.end()) return c->second;
        }
    }
    ApiResponse resp;
    try {
        resp = route(request, scope);
    } catch (const Error& e) {
        resp = {http_status(e.code()), error_body(e.code(), e.what())};
    } catch (const json::exception& e) {
        resp = {400, error_body(ErrorCode::Validation, e.what())};
    } catch (const std::invalid_argument& e) {
        resp = {400, error_body(ErrorCode::Validation, e.what())};
    } catch (const std::exception& e) {
        resp = {500, json{{"code", "internal"}, {"message", e.what()}}};
    }
    if (!key.empty() && resp.status < 500) {
        std::lock_guard lock(cache_mu_);
        if (cache_.emplace(key, resp).second) {
            cache_order_.push_back(key);
            while (cache_order_.size() > config_.idempotency_capacity) {
                cache_.erase(cache_order_.front());
                cache_order_.pop_front();
            }
        }
    }
    return resp;
}

json ApiHandler::report(std::string_view kind, const analysis::StudyData& data, const analysis::ReportOptions& options,
                        const std::optional<analysis::Metric>& metric) {
    if (kind == "trends") {
        if (!metric) return analysis::trends_report(data, options);
        json doc{{"schema", analysis::kReportSchema},
                 {"kind", "trends"},
                 {"metric", analysis::metric_name(*metric)},
                 {"n_participants", data.participants.size()},
                 {"n_weeks", data.n_weeks}};
        doc[analysis::metric_name(*metric)] = analysis::trend_document(data, *metric, options);
        return doc;
    }
    if (kind == "lmm") return analysis::lmm_report(data, options);
    if (kind == "its") return analysis::its_report(data, options);
    if (kind == "retention") return analysis::retention_report(data);
    if (kind == "full") return analysis::full_report(data, options);
    throw Error(ErrorCode::NotFound, "unknown report '" + std::string(kind) + "'");
}

ApiResponse ApiHandler::route(const ApiRequest& req, const std::string& scope) {
    const auto parts = split_path(req.path);
    const bool analyst = scope == kAnalystScope;
    const auto& m = req.method;
    auto query = [&](const char* k) -> std::optional<std::string> {
        auto it = req.query.find(k);
        if (it == req.query.end()) return std::nullopt;
        return it->second;
    };
    // The participant a request acts for: the token's, or an analyst's choice.
    auto subject = [&](const json* body) -> ParticipantId {
        std::optional<std::string> named = query("participant_id");
        if (!named && body) named = opt_string(*body, "participant_id");
        if (analyst) {
            if (!named) throw Error(ErrorCode::Validation, "participant_id is required for analyst requests");
            return *named;
        }
        if (named && *named != scope) throw Error(ErrorCode::Unauthorized, "token does not cover participant " + *named);
        return scope;
    };

    if (parts.size() < 2 || parts[0] != "v1") throw Error(ErrorCode::NotFound, "no route for " + req.path);
    const std::string& res = parts[1];

    if (res == "events" && parts.size() == 2 && m == "POST") {
        json body = parse_body(req.body);
        if (!body.contains("participant_id") && !analyst) body["participant_id"] = scope;
        const auto event = body.get<PhysiologicalEvent>();
        if (!analyst && event.participant_id != scope) {
            throw Error(ErrorCode::Unauthorized, "token does not cover participant " + event.participant_id);
        }
        const auto out = platform_.ingest_event(event);
        json r{{"status", events::ingest_status_name(out.result.status)},
               {"decision", decision_json(out.result.decision)},
               {"enrolled", out.enrolled}};
        r["ticket"] = out.result.ticket ? json(*out.result.ticket) : json(nullptr);
        return {out.result.status == events::IngestStatus::Duplicate ? 200 : 201, r};
    }
    if (res == "prompts" && parts.size() == 3 && parts[2] == "pending" && m == "GET") {
        return {200, json{{"tickets", ticket_list(platform_.pending(subject(nullptr)))}}};
    }
    if (res == "ratings" && parts.size() == 2 && m == "POST") {
        const json body = parse_body(req.body);
        const auto pid = subject(&body);
        const auto out = platform_.submit_rating(pid, body.at("event_id").get<std::string>(), rating_field(body));
        json r{{"annotation", out.annotation}, {"duplicate", out.duplicate}};
        r["task"] = out.task ? json(*out.task) : json(nullptr);
        return {out.duplicate ? 200 : 201, r};
    }
    if (res == "autocomplete" && parts.size() == 2 && m == "GET") {
        const std::string q = query("q").value_or("");
        const int limit = parse_int(query("limit").value_or("8"), "limit");
        if (limit < 1) throw Error(ErrorCode::Validation, "limit must be >= 1");
        const ParticipantId pid = analyst ? query("participant_id").value_or("") : scope;
        return {200, json{{"query", q}, {"suggestions", platform_.autocomplete(pid, q, static_cast<std::size_t>(limit))}}};
    }
    if (res == "annotations") {
        if (parts.size() == 2 && m == "POST") {
            const json body = parse_body(req.body);
            const auto pid = subject(&body);
            const auto a = platform_.complete_annotation(pid, body.at("event_id").get<std::string>(),
                                                         body.at("stressor_text").get<std::string>(),
                                                         opt_string(body, "semantic_location"), opt_gps(body, "gps"));
            return {200, json(a)};
        }
        if (parts.size() == 3 && parts[2] == "manual" && m == "POST") {
            const json body = parse_body(req.body);
            const auto pid = subject(&body);
            std::optional<Timestamp> duration;
            if (auto it = body.find("duration_s"); it != body.end() && !it->is_null()) duration = it->get<Timestamp>();
            std::optional<int> tz;
            if (auto it = body.find("tz_offset_min"); it != body.end() && !it->is_null()) tz = it->get<int>();
            const auto r = platform_.manual_report(pid, rating_field(body), body.at("stressor_text").get<std::string>(),
                                                   opt_string(body, "semantic_location"), body.at("at").get<Timestamp>(),
                                                   duration, opt_gps(body, "gps"), tz);
            return {201, json{{"event", r.event}, {"annotation", r.annotation}}};
        }
        if (parts.size() == 3 && m == "PATCH") {
            const json body = parse_body(req.body);
            const auto pid = subject(&body);
            annotations::AnnotationPatch patch;
            if (body.contains("rating")) patch.rating = rating_field(body);
            patch.stressor_text = opt_string(body, "stressor_text");
            if (auto it = body.find("is_private"); it != body.end() && !it->is_null()) patch.is_private = it->get<bool>();
            return {200, json(platform_.edit_annotation(pid, parts[2], patch))};
        }
    }
    if (res == "dashboard" && parts.size() == 2 && m == "GET") {
        return {200, platform_.dashboard(subject(nullptr))};
    }
    if (res == "visualizations" && parts.size() == 3 && m == "GET") {
        const int week = parse_int(parts[2], "week");
        const auto bundle = platform_.visualizations(subject(nullptr), week);
        json charts = json::array();
        for (const auto& c : bundle.charts) charts.push_back(c);
        return {200, json{{"manifest", viz::bundle_manifest(bundle)}, {"charts", charts}}};
    }
    if (res == "surveys") {
        if (parts.size() == 3 && parts[2] == "current" && m == "GET") {
            return {200, json(platform_.current_survey(subject(nullptr)))};
        }
        if (parts.size() == 2 && m == "POST") {
            json body = parse_body(req.body);
            const auto pid = subject(&body);
            if (!body.contains("week_index")) body["week_index"] = 0;
            auto survey = body.get<WeeklySurvey>();
            return {201, json(platform_.submit_survey(pid, std::move(survey)))};
        }
    }
    if (res == "reports" && parts.size() == 3 && m == "GET") {
        const std::string kind = parts[2];
        std::optional<analysis::Metric> metric;
        if (auto q = query("metric")) metric = analysis::parse_metric(*q);
        auto options = config_.reports;
        if (auto w = query("weighting")) options.weighting = analysis::parse_weighting(*w);
        if (analyst) {
            std::optional<ParticipantId> who;
            if (auto q = query("participant_id")) who = *q;
            return {200, report(kind, platform_.study_data(who), options, metric)};
        }
        if (kind != "trends") throw Error(ErrorCode::Unauthorized, "cohort reports need an analyst token");
        return {200, report(kind, platform_.study_data(scope), options, metric)};
    }
    throw Error(ErrorCode::NotFound, "no route for " + m + " " + req.path);
}

struct HttpServer::Impl {
    ApiHandler& handler;
    httplib::Server server;
    explicit Impl(ApiHandler& h) : handler(h) {}
};

HttpServer::HttpServer(ApiHandler& handler) : impl_(std::make_unique<Impl>(handler)) {
    auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        for (const auto& [k, v] : req.headers) {
            std::string lower = k;
            std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
            r.headers[lower] = v;
        }
        r.body = req.body;
        const auto out = impl_->handler.handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    impl_->server.Get(R"(/.*)", bridge);
    impl_->server.Post(R"(/.*)", bridge);
    impl_->server.Patch(R"(/.*)", bridge);
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }
int HttpServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }
void HttpServer::listen() { impl_->server.listen_after_bind(); }
void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}
bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace moods::gateway
