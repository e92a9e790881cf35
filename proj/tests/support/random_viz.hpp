#pragma once

// Random participant datasets for chart invariants, shared by the unit and
// acceptance tests.

#include <cmath>
#include <random>
#include <string>

#include "moods/vizkit.hpp"

namespace moods::testing {

inline viz::VizDataset random_viz_dataset(std::uint64_t seed, int weeks = 14) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    static const std::vector<std::string> stressors{"work", "traffic/transportation", "family", "school",
                                                    "finances", "deadline", "health", "noise at home"};
    static const std::vector<std::string> places{"home", "office", "car", "gym", "campus"};
    viz::VizDataset d;
    d.participant_id = "P" + std::to_string(seed % 1000);
    d.clock = StudyClock{d.participant_id, 19000 + static_cast<std::int64_t>(seed % 7)};
    const int tz = std::uniform_int_distribution<int>(-8, 2)(rng) * 60;
    const int days = weeks * 7;
    int n = 0;
    for (int day = 0; day < days; ++day) {
        const int k = std::poisson_distribution<int>(2.5)(rng);
        Timestamp t = local_midnight(d.clock.enrollment_day + day, tz) + 7 * kSecondsPerHour;
        for (int i = 0; i < k; ++i) {
            t += std::uniform_int_distribution<Timestamp>(600, 3 * kSecondsPerHour)(rng);
            PhysiologicalEvent e;
            e.event_id = d.participant_id + "-e" + std::to_string(++n);
            e.participant_id = d.participant_id;
            e.start = t;
            e.end = t + std::uniform_int_distribution<Timestamp>(60, 40 * 60)(rng);
            e.score = std::round(u(rng) * 1000.0) / 10.0;
            e.tz_offset_min = tz;
            if (u(rng) < 0.9) e.location = GeoPoint{39.9 + 0.1 * u(rng), -83.0 + 0.1 * u(rng)};
            if (u(rng) < 0.6) {
                StressAnnotation a;
                a.event_id = e.event_id;
                a.participant_id = e.participant_id;
                a.rating = kAllRatings[std::uniform_int_distribution<int>(0, 4)(rng)];
                a.created_at = e.end + 60;
                if (requires_stressor(a.rating) && u(rng) < 0.85) {
                    a.stressor_text = stressors[std::uniform_int_distribution<std::size_t>(0, stressors.size() - 1)(rng)];
                    if (u(rng) < 0.8) a.semantic_location = places[std::uniform_int_distribution<std::size_t>(0, places.size() - 1)(rng)];
                    a.gps = e.location;
                }
                a.is_private = u(rng) < 0.05;
                d.annotations.push_back(std::move(a));
            }
            d.events.push_back(std::move(e));
            t = d.events.back().end;
        }
    }
    return d;
}

}  // namespace moods::testing
