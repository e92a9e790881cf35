#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <string>

#include "moods/analysis.hpp"
#include "moods/gateway/platform.hpp"
#include "moods/json_io.hpp"

namespace moods::gateway {

inline constexpr std::string_view kAnalystScope = "*";

struct ApiConfig {
    std::map<std::string, std::string> tokens;  // bearer token -> participant id, or "*" for analysts
    bool dev_tokens = false;  // also accept "dev-<participant>" and "dev-analyst"
    std::size_t idempotency_capacity = 8192;
    analysis::ReportOptions reports{};
};

/// Loads {"<token>": "<participant id or *>", ...}.
std::map<std::string, std::string> load_tokens(const std::filesystem::path& path);

struct ApiRequest {
    std::string method;
    std::string path;  // without the query string
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
};

struct ApiResponse {
    int status = 200;
    json body;
};

int http_status(ErrorCode code) noexcept;
json error_body(ErrorCode code, const std::string& message);

/// Route table of the v1 API, independent of the HTTP transport so the same
/// handler serves sockets, tests and replays. Mutating requests carrying an
/// X-Request-Id header are answered once and replayed from a cache after.
class ApiHandler {
public:
    ApiHandler(Platform& platform, ApiConfig config);

    ApiResponse handle(const ApiRequest& request);

    Platform& platform() noexcept { return platform_; }
    const ApiConfig& config() const noexcept { return config_; }

    /// Report documents shared with the CLI; kind is trends, lmm, its or retention.
    static json report(std::string_view kind, const analysis::StudyData& data, const analysis::ReportOptions& options,
                       const std::optional<analysis::Metric>& metric = std::nullopt);

private:
    std::string authorize(const ApiRequest& request) const;
    ApiResponse route(const ApiRequest& request, const std::string& scope);

    Platform& platform_;
    ApiConfig config_;
    std::mutex cache_mu_;
    std::map<std::string, ApiResponse> cache_;
    std::deque<std::string> cache_order_;
};

/// Runs an HTTP server on host:port until stop() is called from another thread.
class HttpServer {
public:
    HttpServer(ApiHandler& handler);
    ~HttpServer();

    bool bind(const std::string& host, int port);
    /// Binds to any free port and returns it.
    int bind_any(const std::string& host);
    void listen();  // blocks
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace moods::gateway
