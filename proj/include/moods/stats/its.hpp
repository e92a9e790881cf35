#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace moods::stats {

struct ZScored {
    std::vector<double> values;
    double mean = 0.0;
    double sd = 0.0;   // population sd (ddof = 0)
    bool degenerate = false;  // sd == 0: values are all zero
};

ZScored zscore(std::span<const double> x);
std::map<std::string, ZScored> zscore_per_participant(const std::map<std::string, std::vector<double>>& series);

struct ItsDay {
    std::int64_t day = 0;   // any monotone day number
    int week = 1;           // study week the day belongs to
    double value = 0.0;     // mean intensity over that annotation day
};

struct ItsParticipant {
    std::string participant;
    int action_week = 0;
    std::vector<ItsDay> days;  // annotation days, any order
};

struct ItsOptions {
    int window = 20;  // annotation days on each side of the action week
};

struct ItsPoint {
    int k = 0;
    double observed_mean = 0.0;  // pooled z at this offset
    std::size_t n = 0;
    double fitted = 0.0;
    double counterfactual = 0.0;  // pre-action line extended (post side only)
};

struct ItsReport {
    double intercept = 0.0;
    double pre_slope = 0.0;
    double post_slope = 0.0;
    double slope_change = 0.0;
    double slope_change_p = 1.0;
    double level_change = 0.0;
    double level_change_se = 0.0;
    double level_change_t = 0.0;
    double level_change_p = 1.0;
    double residual_sd = 0.0;
    std::size_t n_participants = 0;
    std::size_t n_points = 0;
    int window = 20;
    std::vector<std::string> excluded;  // no pre or post data, or constant series
    std::vector<ItsPoint> points;
};

/// Segmented regression z = a + b k + d D + c D k on pooled per-participant
/// z-scores, k = -window..-1 before the action week and 1..window after it
/// (annotation-day offsets, action week excluded), D = [k > 0]. The level
/// change is d, tested with a t statistic on n - 4 degrees of freedom.
ItsReport interrupted_time_series(std::span<const ItsParticipant> cohort, const ItsOptions& options = {});

}  // namespace moods::stats
