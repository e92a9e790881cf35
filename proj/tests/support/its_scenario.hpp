#pragma once

// Behaviour-change scenario: a simulated cohort where every participant takes
// an action, of whom the first 17 who start between weeks 4 and 11 and have
// ratings both before and after the action week form the ITS cohort. The
// action takers carry no background trend; their drop comes from the step.

#include <map>
#include <vector>

#include "moods/analysis.hpp"
#include "moods/simulator.hpp"

namespace moods::testing {

struct ItsScenario {
    std::vector<ParticipantId> chosen;
    stats::ItsReport report;
};

inline ItsScenario run_its_scenario(std::uint64_t seed, double step, std::size_t cohort_size = 17) {
    sim::SimConfig cfg;
    cfg.seed = seed;
    cfg.n_participants = 40;
    cfg.action_fraction = 1.0;
    cfg.intensity_slope_mean = 0.0;
    auto data = sim::simulate(cfg);

    std::map<ParticipantId, int> eligible;
    for (const auto& p : data.participants) {
        if (p.action_week >= 4 && p.action_week <= 11) eligible[p.participant_id] = p.action_week;
    }
    ItsScenario out;
    std::map<ParticipantId, int> weeks;
    for (const auto& c : analysis::its_cohort(analysis::from_dataset(data), eligible)) {
        bool pre = false, post = false;
        for (const auto& d : c.days) {
            pre |= d.week < c.action_week;
            post |= d.week > c.action_week;
        }
        if (pre && post && out.chosen.size() < cohort_size) {
            out.chosen.push_back(c.participant);
            weeks[c.participant] = c.action_week;
        }
    }
    sim::inject_action_effect(data, step, out.chosen);
    out.report = stats::interrupted_time_series(analysis::its_cohort(analysis::from_dataset(data), weeks));
    return out;
}

}  // namespace moods::testing
