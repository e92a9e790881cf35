#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moods/domain.hpp"
#include "moods/event_engine.hpp"
#include "moods/json_io.hpp"

namespace moods::sim {

/// Knobs of the synthetic cohort. Defaults reproduce the published field
/// rates (prompts, responses, stressors per day, retention) and the published
/// trend magnitudes; every key can be overridden from a JSON config file.
struct SimConfig {
    std::uint64_t seed = 20240501;
    int n_participants = 136;
    int n_weeks = 14;
    std::int64_t start_day = 19359;  // 2023-01-02, a Monday
    int enrollment_spread_days = 14;
    std::vector<int> tz_offsets_min = {-300, -360, -420, -480};

    // Physiological events
    double events_per_day = 20.5;
    double events_per_day_sd = 0.2;  // lognormal spread of the participant rate
    double nonwear_day_prob = 0.06;
    int wake_hour = 7;
    int sleep_hour = 23;
    double duration_median_min = 6.0;
    double duration_log_sd = 0.5;
    // Score mixture: weight * Beta(a1,b1) + (1-weight) * Beta(a2,b2), scaled to 0..100
    double score_mix_weight = 0.7;
    double score_a1 = 2.0, score_b1 = 5.0, score_a2 = 5.0, score_b2 = 2.0;

    // Prompt engine used for sampling
    events::EngineConfig engine{};

    // Compliance
    double response_rate = 0.74;
    double response_rate_concentration = 20.0;  // Beta spread across participants
    double response_delay_mean_s = 900.0;
    double stressor_completion_prob = 0.77;
    double private_prob = 0.008;
    double manual_reports_per_day = 0.04;
    double survey_response_prob = 0.8;

    // Momentary stress intensity (0..4 latent scale). Ratings are clamped at
    // 0, which lifts observed means and flattens slopes, so the latent mean
    // and slope sit below the observed cohort targets (about 1.76 and -0.039).
    double intensity_baseline_mean = 1.60;
    double intensity_baseline_sd = 0.76;
    double intensity_slope_mean = -0.060;  // per week
    double intensity_slope_sd = 0.062;
    double intensity_daily_sd = 0.35;
    double intensity_event_sd = 0.9;
    double initial_elevation = 0.15;  // added in week 1

    // Weekly stress frequency (1..4 latent scale)
    double frequency_baseline_mean = 2.86;
    double frequency_baseline_sd = 0.74;
    double frequency_slope_mean = -0.027;
    double frequency_slope_sd = 0.066;
    double frequency_weekly_sd = 0.35;
    double frequency_initial_elevation = 0.1;

    double recall_ease_mean = 2.1;
    double recall_ease_sd = 0.7;

    // Stressors and places
    double stressor_zipf_exponent = 1.0;
    double novel_stressor_prob = 0.14;
    double location_zipf_exponent = 1.2;

    // Entry time learning curve (seconds) by stressor episode index k = 1, 2, ...
    double entry_time_intercept_s = 50.46;
    double entry_time_slope_s = -0.58;
    double entry_time_floor_s = 8.0;
    double entry_time_noise_s = 12.0;

    // Retention: geometric daily hazard; derived from day30_survival unless given
    std::optional<double> dropout_hazard;
    double day30_survival = 0.81;

    // Behaviour-change subcohort
    double action_fraction = 0.14;
    double action_week_mean = 6.0;
    double action_week_sd = 2.0;
    double action_step = 0.0;  // z-units; applied by inject_action_effect after simulation

    double daily_hazard() const;
    int n_days() const { return 7 * n_weeks; }
    void validate() const;
};

SimConfig parse_config(const json& j);
SimConfig load_config(const std::filesystem::path& path);
json config_to_json(const SimConfig& c);

struct ParticipantTruth {
    ParticipantId participant_id;
    std::int64_t enrollment_day = 0;
    int tz_offset_min = 0;
    int last_active_day = 0;  // offset from enrollment
    double events_per_day = 0.0;
    double response_rate = 0.0;
    double intensity_baseline = 0.0;
    double intensity_slope = 0.0;
    double frequency_baseline = 0.0;
    double frequency_slope = 0.0;
    int action_week = 0;         // 0 = not in the action subcohort
    double action_shift = 0.0;   // latent shift applied after the action week (intensity units)
    double daily_intensity_sd = 0.0;
};

struct RatingTruth {
    double latent = 0.0;
    double dither = 0.0;
};

struct SurveyTruth {
    double latent = 0.0;  // latent daily stress count on the 1..4 scale
    double dither = 0.0;
};

/// What a participant did, in the order a live deployment would see it.
enum class ActionKind { Event, Rating, Completion, MakePrivate, Manual, Survey };

struct Action {
    Timestamp at = 0;
    ActionKind kind = ActionKind::Event;
    ParticipantId participant_id;
    std::size_t index = 0;  // into the dataset vector matching the kind
};

struct Dataset {
    SimConfig config;
    std::vector<ParticipantTruth> participants;
    std::vector<PhysiologicalEvent> events;        // detected events
    std::vector<events::PromptTicket> tickets;
    std::vector<StressAnnotation> annotations;     // prompted and manual
    std::vector<PhysiologicalEvent> manual_events; // synthetic events behind manual reports
    std::vector<WeeklySurvey> surveys;
    std::map<EventId, RatingTruth> rating_truth;
    std::map<std::pair<ParticipantId, int>, SurveyTruth> survey_truth;

    /// Interleaved timeline of participant actions, sorted by time.
    std::vector<Action> timeline() const;
};

Dataset simulate(const SimConfig& config);

/// Shifts the latent intensity of every annotation after the participant's
/// action week by step x (participant's realized daily-intensity sd) and
/// re-discretizes with the stored dither. Participants not in `subcohort`
/// (empty = every participant with an action week) are untouched.
void inject_action_effect(Dataset& data, double step, const std::vector<ParticipantId>& subcohort = {});

/// Dither-rounded rating on the 0..4 scale.
StressRating discretize_rating(double latent, double dither);
/// Dither-rounded frequency choice on the 1..4 scale.
FrequencyChoice discretize_frequency(double latent, double dither);

/// Writes events/tickets/annotations/manual_events/surveys as JSONL plus
/// participants.jsonl (latent truths) and config.json.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

void to_json(json& j, const ParticipantTruth& t);
void from_json(const json& j, ParticipantTruth& t);

}  // namespace moods::sim
