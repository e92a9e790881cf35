#include <cstdlib>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "moods/analysis.hpp"
#include "moods/gateway/http_api.hpp"
#include "moods/gateway/platform.hpp"
#include "moods/gateway/replay.hpp"
#include "moods/simulator.hpp"
#include "moods/vizkit.hpp"

namespace fs = std::filesystem;
using namespace moods;

namespace {

gateway::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::string default_data_dir() {
    if (const char* env = std::getenv("MOODS_DATA_DIR"); env && *env) return env;
    return "data";
}

void write_json(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Validation, "cannot write " + path);
    out << j.dump(2) << '\n';
}

sim::SimConfig config_or_default(const std::string& path) {
    return path.empty() ? sim::SimConfig{} : sim::load_config(path);
}

bool is_table(const fs::path& p) {
    const auto ext = p.extension().string();
    return fs::is_regular_file(p) && (ext == ".csv" || ext == ".tsv" || ext == ".txt");
}

json analyze_table(const std::string& kind, const fs::path& in, const analysis::ReportOptions& opts) {
    const auto pw = analysis::read_weekly_csv(in);
    json doc{{"schema", analysis::kReportSchema}, {"kind", kind}, {"source", in.filename().string()}};
    if (kind == "trends") {
        doc["all_weeks"] = to_json(analysis::trend_analysis(pw, analysis::Metric::Intensity, opts.weighting, 1));
        doc["excluding_first_week"] = to_json(analysis::trend_analysis(pw, analysis::Metric::Intensity, opts.weighting, 2));
        doc["all_weeks"].erase("metric");
        doc["excluding_first_week"].erase("metric");
    } else if (kind == "lmm") {
        doc["value"] = to_json(analysis::lmm_analysis(pw, opts.lmm_min_weeks));
    } else {
        throw Error(ErrorCode::Validation, "tabular input supports trends and lmm only");
    }
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MOODS stress-EMA platform: simulation, service, visualization and analysis"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic cohort");
    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    std::optional<int> sim_n;
    sim_cmd->add_option("--config", sim_config, "JSON config (defaults when omitted)")->check(CLI::ExistingFile);
    sim_cmd->add_option("--out", sim_out, "Output directory")->required();
    sim_cmd->add_option("--seed", sim_seed, "Override the seed");
    sim_cmd->add_option("--participants", sim_n, "Override the cohort size");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    std::string serve_data = default_data_dir(), serve_host = "127.0.0.1", serve_tokens, serve_engine;
    int serve_port = 8080;
    bool serve_dev = false;
    serve_cmd->add_option("--data", serve_data, "Data directory (MOODS_DATA_DIR)");
    serve_cmd->add_option("--port", serve_port, "Port")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", serve_host, "Bind address");
    serve_cmd->add_option("--tokens", serve_tokens, "JSON map of bearer token to participant id or *")
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--engine", serve_engine, "JSON prompt-engine config")->check(CLI::ExistingFile);
    serve_cmd->add_flag("--dev-tokens", serve_dev, "Accept dev-<participant> and dev-analyst tokens");

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "Statistical reports");
    std::string an_kind, an_in = default_data_dir(), an_out = "-", an_metric, an_weighting = "participant_mean";
    int an_boot = 200;
    an_cmd->add_option("kind", an_kind, "trends | lmm | its | retention | full")
        ->required()
        ->check(CLI::IsMember({"trends", "lmm", "its", "retention", "full"}));
    an_cmd->add_option("--in", an_in, "Dataset or data directory, or a participant,week,value table");
    an_cmd->add_option("--out", an_out, "Report file ('-' for stdout)");
    an_cmd->add_option("--metric", an_metric, "intensity | frequency (trends only)");
    an_cmd->add_option("--weighting", an_weighting, "participant_mean | pooled");
    an_cmd->add_option("--bootstrap", an_boot, "Bootstrap resamples for trend bands (0 disables)");

    // viz
    auto* viz_cmd = app.add_subcommand("viz", "Visualization bundles");
    viz_cmd->require_subcommand(1);
    auto* viz_build = viz_cmd->add_subcommand("build", "Build one participant's weekly bundle");
    std::string viz_pid, viz_out, viz_in = default_data_dir();
    int viz_week = 1;
    viz_build->add_option("--participant", viz_pid, "Participant id")->required();
    viz_build->add_option("--week", viz_week, "Study week")->required()->check(CLI::PositiveNumber);
    viz_build->add_option("--out", viz_out, "Output directory")->required();
    viz_build->add_option("--in", viz_in, "Dataset or data directory");

    // replay-study
    auto* rep_cmd = app.add_subcommand("replay-study", "Simulate, ingest through the API, build bundles, analyse");
    std::string rep_config, rep_out;
    int rep_stride = 1;
    bool rep_no_bundles = false, rep_no_persist = false;
    rep_cmd->add_option("--config", rep_config, "JSON sim config (defaults when omitted)")->check(CLI::ExistingFile);
    rep_cmd->add_option("--out", rep_out, "Output directory for report, logs and bundles");
    rep_cmd->add_option("--bundle-stride", rep_stride, "Build bundles every n-th week")->check(CLI::PositiveNumber);
    rep_cmd->add_flag("--no-bundles", rep_no_bundles, "Skip writing bundle files");
    rep_cmd->add_flag("--no-persist", rep_no_persist, "Keep service state in memory only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim_cmd) {
            auto cfg = config_or_default(sim_config);
            if (sim_seed) cfg.seed = *sim_seed;
            if (sim_n) cfg.n_participants = *sim_n;
            cfg.validate();
            const auto data = sim::simulate(cfg);
            sim::write_dataset(data, sim_out);
            std::cout << "simulated " << data.participants.size() << " participants, " << data.events.size()
                      << " events, " << data.tickets.size() << " prompts, " << data.annotations.size()
                      << " annotations, " << data.surveys.size() << " surveys -> " << sim_out << '\n';
            return 0;
        }
        if (*serve_cmd) {
            gateway::PlatformConfig pc;
            pc.data_dir = serve_data;
            if (!serve_engine.empty()) {
                std::ifstream in(serve_engine);
                json j;
                in >> j;
                j.get_to(pc.engine);
            }
            gateway::Platform platform(pc);
            gateway::ApiConfig ac;
            if (!serve_tokens.empty()) ac.tokens = gateway::load_tokens(serve_tokens);
            ac.dev_tokens = serve_dev || serve_tokens.empty();
            gateway::ApiHandler handler(platform, ac);
            gateway::HttpServer server(handler);
            if (!server.bind(serve_host, serve_port)) {
                std::cerr << "cannot bind " << serve_host << ':' << serve_port << '\n';
                return 1;
            }
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving " << serve_data << " on http://" << serve_host << ':' << serve_port
                      << (ac.dev_tokens ? " (dev tokens on)" : "") << std::endl;
            server.listen();
            platform.snapshot_all();
            g_server = nullptr;
            return 0;
        }
        if (*an_cmd) {
            analysis::ReportOptions opts;
            opts.weighting = analysis::parse_weighting(an_weighting);
            opts.bootstrap_resamples = an_boot;
            std::optional<analysis::Metric> metric;
            if (!an_metric.empty()) metric = analysis::parse_metric(an_metric);
            json doc;
            if (is_table(an_in)) {
                doc = analyze_table(an_kind, an_in, opts);
            } else {
                const auto data = analysis::load_study(an_in);
                doc = gateway::ApiHandler::report(an_kind, data, opts, metric);
            }
            write_json(an_out, doc);
            return 0;
        }
        if (*viz_build) {
            const auto data = analysis::load_study(viz_in);
            viz::VizDataset vd;
            vd.participant_id = viz_pid;
            bool found = false;
            for (const auto& p : data.participants) {
                if (p.participant_id == viz_pid) {
                    vd.clock = StudyClock{viz_pid, p.enrollment_day};
                    found = true;
                }
            }
            if (!found) throw Error(ErrorCode::NotFound, "unknown participant '" + viz_pid + "'");
            for (const auto& e : data.events) {
                if (e.participant_id == viz_pid) vd.events.push_back(e);
            }
            for (const auto& a : data.annotations) {
                if (a.participant_id == viz_pid) vd.annotations.push_back(a);
            }
            const auto bundle = viz::assemble_bundle(vd, viz_week);
            viz::write_bundle(bundle, viz_out);
            std::cout << bundle.charts.size() << " charts -> " << viz_out << '\n';
            return 0;
        }
        if (*rep_cmd) {
            const auto cfg = config_or_default(rep_config);
            gateway::ReplayOptions ro;
            if (!rep_out.empty()) ro.out_dir = rep_out;
            ro.bundle_stride = rep_stride;
            ro.write_bundles = !rep_no_bundles;
            ro.persist = !rep_no_persist;
            const auto res = gateway::replay_study(cfg, ro);
            const auto& r = res.report;
            auto line = [&](const char* name, const json& t) {
                if (t.contains("trend")) {
                    std::cout << name << ": m=" << t["trend"]["m"] << " b=" << t["trend"]["b"] << " Z=" << t["trend"]["Z"]
                              << " p=" << t["trend"]["p"] << '\n';
                } else {
                    std::cout << name << ": " << t.dump() << '\n';
                }
            };
            line("intensity", r["trends"]["intensity"]["all_weeks"]);
            line("frequency", r["trends"]["frequency"]["all_weeks"]);
            std::cout << "replay: " << r["replay"].dump() << '\n';
            if (rep_out.empty()) std::cout << r.dump(2) << '\n';
            else std::cout << "report -> " << (fs::path(rep_out) / "report.json").string() << '\n';
            return res.stats.failures == 0 ? 0 : 2;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
