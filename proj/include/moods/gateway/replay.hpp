#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "moods/analysis.hpp"
#include "moods/gateway/http_api.hpp"
#include "moods/simulator.hpp"

namespace moods::gateway {

// Cohort-level outcomes the calibrated config is meant to reproduce.
struct StudyTargets {
    double intensity_slope = -0.039;
    double frequency_slope = -0.027;
    double response_rate = 0.74;
    double day30_survival = 0.81;
};

struct ReplayOptions {
    std::optional<std::filesystem::path> out_dir;   // report, bundles and logs go here when set
    bool persist = true;         // keep append-only logs under out_dir/data
    bool write_bundles = true;   // out_dir/bundles/<participant>/week_NN
    int bundle_stride = 1;       // build bundles every n-th week (the last week always)
    analysis::ReportOptions report{};
    StudyTargets targets{};
};

struct ReplayStats {
    std::size_t actions = 0;
    std::size_t requests = 0;
    std::map<int, std::size_t> statuses;   // HTTP status -> count
    std::size_t failures = 0;              // responses that disagree with the simulated outcome
    std::size_t ticket_mismatches = 0;     // prompts the service issued differently from the simulation
    std::size_t bundles = 0;
    double seconds_ingest = 0.0;
    double seconds_bundles = 0.0;
    double seconds_analysis = 0.0;
};

struct ReplayResult {
    sim::Dataset dataset;
    ReplayStats stats;
    json report;  // full analysis report over what the service recorded
};

/// End to end: simulate the cohort, drive every participant action through
/// the v1 API against a fresh platform on a simulated clock, build the
/// weekly visualization bundles, then analyse what the service stored.
ReplayResult replay_study(const sim::SimConfig& config, const ReplayOptions& options = {});

json to_json(const ReplayStats& s);

}  // namespace moods::gateway
