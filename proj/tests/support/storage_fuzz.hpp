#pragma once

// Crash-truncation trials: write a random history, cut the logs back to what
// a crash after record j would leave (plus a torn piece of record j+1), and
// check the store loads exactly the state it had after record j.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "moods/storage.hpp"

namespace moods::testing {

struct Written {
    storage::ParticipantState state;
    std::array<std::uint64_t, 3> sizes{};
    int log = 0;  // log the record went to
};

inline std::array<std::uint64_t, 3> log_sizes(const std::filesystem::path& dir) {
    std::array<std::uint64_t, 3> s{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto p = dir / storage::kLogNames[i];
        s[i] = std::filesystem::exists(p) ? std::filesystem::file_size(p) : 0;
    }
    return s;
}

/// Appends `n` random records through the store; returns the state after each.
inline std::vector<Written> write_random_history(storage::ParticipantStore& store, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Written> out;
    const ParticipantId pid = store.participant();
    out.push_back({*store.state(), log_sizes(store.dir()), -1});
    std::vector<StressAnnotation> notes;
    int events = 0;
    const Timestamp t0 = 19000 * kSecondsPerDay;
    while (static_cast<int>(out.size()) <= n) {
        const double r = u(rng);
        bool wrote = false;
        int log = 0;
        if (r < 0.35 || events == 0) {
            PhysiologicalEvent e;
            e.event_id = pid + "-e" + std::to_string(++events);
            e.participant_id = pid;
            e.start = t0 + events * 1800;
            e.end = e.start + 300;
            e.score = std::round(u(rng) * 1000) / 10;
            wrote = store.put_event(e);
        } else if (r < 0.5) {
            events::PromptTicket t;
            t.event_id = pid + "-e" + std::to_string(std::uniform_int_distribution<int>(1, events)(rng));
            t.participant_id = pid;
            t.issued_at = t0;
            t.expires_at = t0 + kSecondsPerDay;
            t.responded = u(rng) < 0.5;
            wrote = store.put_ticket(t);
        } else if (r < 0.75) {
            log = 1;
            StressAnnotation a;
            a.event_id = pid + "-e" + std::to_string(std::uniform_int_distribution<int>(1, events)(rng));
            a.participant_id = pid;
            a.rating = kAllRatings[std::uniform_int_distribution<int>(0, 4)(rng)];
            a.is_private = u(rng) < 0.2;
            a.revision = std::uniform_int_distribution<int>(1, 3)(rng);
            if (u(rng) < 0.5) a.stressor_text = "stressor " + std::to_string(std::uniform_int_distribution<int>(0, 9)(rng));
            wrote = store.put_annotation(a);
        } else if (r < 0.85) {
            log = 1;
            annotations::LexiconEntry e;
            e.text = "word " + std::to_string(std::uniform_int_distribution<int>(0, 5)(rng));
            e.use_count = std::uniform_int_distribution<int>(1, 9)(rng);
            wrote = store.put_lexicon(e);
        } else {
            log = 2;
            WeeklySurvey s;
            s.participant_id = pid;
            s.week_index = std::uniform_int_distribution<int>(1, 14)(rng);
            s.frequency = kAllFrequencyChoices[std::uniform_int_distribution<int>(0, 3)(rng)];
            s.recall_ease = std::uniform_int_distribution<int>(1, 5)(rng);
            s.submitted_at = t0 + s.week_index * 7 * kSecondsPerDay;
            wrote = store.put_survey(s);
        }
        if (wrote) out.push_back({*store.state(), log_sizes(store.dir()), log});
    }
    return out;
}

/// One trial. Returns an empty string on success.
inline std::string truncation_trial(std::uint64_t seed, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::mt19937_64 rng(seed);
    const fs::path dir = root / ("trial_" + std::to_string(seed));
    fs::remove_all(dir);
    const int n = std::uniform_int_distribution<int>(1, 60)(rng);
    std::vector<Written> hist;
    {
        storage::ParticipantStore store(dir, "P001");
        hist = write_random_history(store, n, rng);
        if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
            // snapshots taken before the crash point must not hide the cut
            store.write_snapshot();
        }
    }
    const int j = std::uniform_int_distribution<int>(0, n)(rng);
    auto cut = hist[j].sizes;
    if (j < n) {
        // a torn fragment of the next record
        const int l = hist[j + 1].log;
        const auto full = hist[j + 1].sizes[l] - hist[j].sizes[l];
        cut[l] += std::uniform_int_distribution<std::uint64_t>(0, full - 1)(rng);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const auto p = dir / storage::kLogNames[i];
        if (fs::exists(p)) fs::resize_file(p, cut[i]);
    }
    std::string err;
    {
        storage::ParticipantStore reopened(dir, "P001");
        const auto& want = hist[j].state;
        const auto got = reopened.state();
        if (got->hash() != want.hash()) err = "state hash differs after cut at record " + std::to_string(j);
        else if (!(*got == want)) err = "state differs after cut at record " + std::to_string(j);
        else if (log_sizes(dir) != hist[j].sizes) err = "torn tail not repaired";
        // the repaired store accepts new writes and reloads them
        if (err.empty()) {
            StressAnnotation a;
            a.event_id = "after-crash";
            a.participant_id = "P001";
            reopened.put_annotation(a);
        }
    }
    if (err.empty()) {
        storage::ParticipantStore again(dir, "P001");
        if (!again.state()->annotations.count("after-crash")) err = "write after repair lost";
    }
    fs::remove_all(dir);
    return err;
}

}  // namespace moods::testing
