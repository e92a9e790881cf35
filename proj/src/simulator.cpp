#include "moods/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <random>
#include <sstream>

#include "moods/annotation_store.hpp"
#include "moods/stats/resampling.hpp"
#include "moods/survey_engine.hpp"

namespace moods::sim {

namespace {

using Rng = std::mt19937_64;

// Ranked so that the most common stressors come first; the rest of the seed
// vocabulary follows in file order.
const std::vector<std::string> kPopularStressors = {
    "work", "school", "family", "finances", "health", "relationships",
    "traffic/transportation", "deadlines", "sleep", "unsure"};

const std::vector<std::string> kNovelHeads = {
    "landlord", "car repair", "child care", "insurance claim", "presentation", "job interview",
    "neighbor", "roommate", "doctor visit", "tax filing", "flight delay", "power outage",
    "internet outage", "group chat", "wedding planning", "moving boxes", "class registration",
    "pet", "parking ticket", "phone broke", "lost keys", "dentist", "team meeting", "grant report"};
const std::vector<std::string> kNovelQualifiers = {"", "late ", "upcoming ", "unexpected ", "missed ",
                                                   "another ", "annoying "};
const std::vector<std::string> kNovelContexts = {"", " at work", " at home", " with family", " with friends",
                                                 " at school", " again", " this week", " tomorrow", " today",
                                                 " on the weekend", " before class"};

struct Place {
    std::string name;
    GeoPoint gps;
};

const std::vector<std::string> kPlaceNames = {
    "home", "work", "car", "office", "school", "commute", "grocery store", "restaurant",
    "gym", "parents' house", "friend's house", "campus", "outdoors", "online"};

std::vector<double> zipf_weights(std::size_t n, double s) {
    std::vector<double> w(n);
    for (std::size_t r = 0; r < n; ++r) w[r] = std::pow(static_cast<double>(r + 1), -s);
    return w;
}

std::vector<std::string> ranked_stressors() {
    std::vector<std::string> out = kPopularStressors;
    for (const auto& s : annotations::default_seed_stressors()) {
        const auto norm = annotations::normalize_stressor(s);
        if (std::find(out.begin(), out.end(), norm) == out.end()) out.push_back(norm);
    }
    return out;
}

double beta_draw(Rng& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

std::string participant_name(int i) {
    std::ostringstream os;
    os << 'P';
    os.width(3);
    os.fill('0');
    os << i + 1;
    return os.str();
}

std::string event_name(const std::string& pid, int seq) {
    std::ostringstream os;
    os << pid << "-e";
    os.width(5);
    os.fill('0');
    os << seq;
    return os.str();
}

template <typename T>
void set_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

double SimConfig::daily_hazard() const {
    if (dropout_hazard) return *dropout_hazard;
    return 1.0 - std::pow(day30_survival, 1.0 / 30.0);
}

void SimConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::Validation, "sim config: " + m); };
    auto prob = [&](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) fail(std::string(name) + " must be in [0,1]");
    };
    if (n_participants < 1) fail("n_participants must be >= 1");
    if (n_weeks < 1) fail("n_weeks must be >= 1");
    if (enrollment_spread_days < 0) fail("enrollment_spread_days must be >= 0");
    if (tz_offsets_min.empty()) fail("tz_offsets_min must not be empty");
    if (events_per_day < 0.0) fail("events_per_day must be >= 0");
    if (!(wake_hour >= 0 && wake_hour < sleep_hour && sleep_hour <= 24)) fail("need 0 <= wake_hour < sleep_hour <= 24");
    if (duration_median_min <= 0.0) fail("duration_median_min must be > 0");
    prob(nonwear_day_prob, "nonwear_day_prob");
    prob(score_mix_weight, "score_mix_weight");
    prob(response_rate, "response_rate");
    prob(stressor_completion_prob, "stressor_completion_prob");
    prob(private_prob, "private_prob");
    prob(survey_response_prob, "survey_response_prob");
    prob(novel_stressor_prob, "novel_stressor_prob");
    prob(day30_survival, "day30_survival");
    prob(action_fraction, "action_fraction");
    if (dropout_hazard) prob(*dropout_hazard, "dropout_hazard");
    if (response_rate_concentration <= 0.0) fail("response_rate_concentration must be > 0");
    if (manual_reports_per_day < 0.0) fail("manual_reports_per_day must be >= 0");
    if (entry_time_floor_s < 1.0) fail("entry_time_floor_s must be >= 1");
    engine.policy.validate();
}

SimConfig parse_config(const json& j) {
    static const std::set<std::string> known = {
        "seed", "n_participants", "n_weeks", "start_day", "enrollment_spread_days", "tz_offsets_min",
        "events_per_day", "events_per_day_sd", "nonwear_day_prob", "wake_hour", "sleep_hour",
        "duration_median_min", "duration_log_sd", "score_mix_weight", "score_a1", "score_b1", "score_a2",
        "score_b2", "engine", "response_rate", "response_rate_concentration", "response_delay_mean_s",
        "stressor_completion_prob", "private_prob", "manual_reports_per_day", "survey_response_prob",
        "intensity_baseline_mean", "intensity_baseline_sd", "intensity_slope_mean", "intensity_slope_sd",
        "intensity_daily_sd", "intensity_event_sd", "initial_elevation", "frequency_baseline_mean",
        "frequency_baseline_sd", "frequency_slope_mean", "frequency_slope_sd", "frequency_weekly_sd",
        "frequency_initial_elevation", "recall_ease_mean", "recall_ease_sd", "stressor_zipf_exponent",
        "novel_stressor_prob", "location_zipf_exponent", "entry_time_intercept_s", "entry_time_slope_s",
        "entry_time_floor_s", "entry_time_noise_s", "dropout_hazard", "day30_survival", "action_fraction",
        "action_week_mean", "action_week_sd", "action_step"};
    if (!j.is_object()) throw Error(ErrorCode::Validation, "sim config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw Error(ErrorCode::Validation, "unknown sim config key '" + key + "'");
    }
    SimConfig c;
    try {
        set_if(j, "seed", c.seed);
        set_if(j, "n_participants", c.n_participants);
        set_if(j, "n_weeks", c.n_weeks);
        set_if(j, "start_day", c.start_day);
        set_if(j, "enrollment_spread_days", c.enrollment_spread_days);
        set_if(j, "tz_offsets_min", c.tz_offsets_min);
        set_if(j, "events_per_day", c.events_per_day);
        set_if(j, "events_per_day_sd", c.events_per_day_sd);
        set_if(j, "nonwear_day_prob", c.nonwear_day_prob);
        set_if(j, "wake_hour", c.wake_hour);
        set_if(j, "sleep_hour", c.sleep_hour);
        set_if(j, "duration_median_min", c.duration_median_min);
        set_if(j, "duration_log_sd", c.duration_log_sd);
        set_if(j, "score_mix_weight", c.score_mix_weight);
        set_if(j, "score_a1", c.score_a1);
        set_if(j, "score_b1", c.score_b1);
        set_if(j, "score_a2", c.score_a2);
        set_if(j, "score_b2", c.score_b2);
        if (auto it = j.find("engine"); it != j.end()) it->get_to(c.engine);
        set_if(j, "response_rate", c.response_rate);
        set_if(j, "response_rate_concentration", c.response_rate_concentration);
        set_if(j, "response_delay_mean_s", c.response_delay_mean_s);
        set_if(j, "stressor_completion_prob", c.stressor_completion_prob);
        set_if(j, "private_prob", c.private_prob);
        set_if(j, "manual_reports_per_day", c.manual_reports_per_day);
        set_if(j, "survey_response_prob", c.survey_response_prob);
        set_if(j, "intensity_baseline_mean", c.intensity_baseline_mean);
        set_if(j, "intensity_baseline_sd", c.intensity_baseline_sd);
        set_if(j, "intensity_slope_mean", c.intensity_slope_mean);
        set_if(j, "intensity_slope_sd", c.intensity_slope_sd);
        set_if(j, "intensity_daily_sd", c.intensity_daily_sd);
        set_if(j, "intensity_event_sd", c.intensity_event_sd);
        set_if(j, "initial_elevation", c.initial_elevation);
        set_if(j, "frequency_baseline_mean", c.frequency_baseline_mean);
        set_if(j, "frequency_baseline_sd", c.frequency_baseline_sd);
        set_if(j, "frequency_slope_mean", c.frequency_slope_mean);
        set_if(j, "frequency_slope_sd", c.frequency_slope_sd);
        set_if(j, "frequency_weekly_sd", c.frequency_weekly_sd);
        set_if(j, "frequency_initial_elevation", c.frequency_initial_elevation);
        set_if(j, "recall_ease_mean", c.recall_ease_mean);
        set_if(j, "recall_ease_sd", c.recall_ease_sd);
        set_if(j, "stressor_zipf_exponent", c.stressor_zipf_exponent);
        set_if(j, "novel_stressor_prob", c.novel_stressor_prob);
        set_if(j, "location_zipf_exponent", c.location_zipf_exponent);
        set_if(j, "entry_time_intercept_s", c.entry_time_intercept_s);
        set_if(j, "entry_time_slope_s", c.entry_time_slope_s);
        set_if(j, "entry_time_floor_s", c.entry_time_floor_s);
        set_if(j, "entry_time_noise_s", c.entry_time_noise_s);
        if (auto it = j.find("dropout_hazard"); it != j.end() && !it->is_null()) c.dropout_hazard = it->get<double>();
        set_if(j, "day30_survival", c.day30_survival);
        set_if(j, "action_fraction", c.action_fraction);
        set_if(j, "action_week_mean", c.action_week_mean);
        set_if(j, "action_week_sd", c.action_week_sd);
        set_if(j, "action_step", c.action_step);
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::Validation, std::string("sim config: ") + ex.what());
    }
    c.validate();
    return c;
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::Validation, path.string() + ": " + ex.what());
    }
    return parse_config(j);
}

json config_to_json(const SimConfig& c) {
    json j{{"seed", c.seed},
           {"n_participants", c.n_participants},
           {"n_weeks", c.n_weeks},
           {"start_day", c.start_day},
           {"enrollment_spread_days", c.enrollment_spread_days},
           {"tz_offsets_min", c.tz_offsets_min},
           {"events_per_day", c.events_per_day},
           {"events_per_day_sd", c.events_per_day_sd},
           {"nonwear_day_prob", c.nonwear_day_prob},
           {"wake_hour", c.wake_hour},
           {"sleep_hour", c.sleep_hour},
           {"duration_median_min", c.duration_median_min},
           {"duration_log_sd", c.duration_log_sd},
           {"score_mix_weight", c.score_mix_weight},
           {"score_a1", c.score_a1},
           {"score_b1", c.score_b1},
           {"score_a2", c.score_a2},
           {"score_b2", c.score_b2},
           {"engine", c.engine},
           {"response_rate", c.response_rate},
           {"response_rate_concentration", c.response_rate_concentration},
           {"response_delay_mean_s", c.response_delay_mean_s},
           {"stressor_completion_prob", c.stressor_completion_prob},
           {"private_prob", c.private_prob},
           {"manual_reports_per_day", c.manual_reports_per_day},
           {"survey_response_prob", c.survey_response_prob},
           {"intensity_baseline_mean", c.intensity_baseline_mean},
           {"intensity_baseline_sd", c.intensity_baseline_sd},
           {"intensity_slope_mean", c.intensity_slope_mean},
           {"intensity_slope_sd", c.intensity_slope_sd},
           {"intensity_daily_sd", c.intensity_daily_sd},
           {"intensity_event_sd", c.intensity_event_sd},
           {"initial_elevation", c.initial_elevation},
           {"frequency_baseline_mean", c.frequency_baseline_mean},
           {"frequency_baseline_sd", c.frequency_baseline_sd},
           {"frequency_slope_mean", c.frequency_slope_mean},
           {"frequency_slope_sd", c.frequency_slope_sd},
           {"frequency_weekly_sd", c.frequency_weekly_sd},
           {"frequency_initial_elevation", c.frequency_initial_elevation},
           {"recall_ease_mean", c.recall_ease_mean},
           {"recall_ease_sd", c.recall_ease_sd},
           {"stressor_zipf_exponent", c.stressor_zipf_exponent},
           {"novel_stressor_prob", c.novel_stressor_prob},
           {"location_zipf_exponent", c.location_zipf_exponent},
           {"entry_time_intercept_s", c.entry_time_intercept_s},
           {"entry_time_slope_s", c.entry_time_slope_s},
           {"entry_time_floor_s", c.entry_time_floor_s},
           {"entry_time_noise_s", c.entry_time_noise_s},
           {"day30_survival", c.day30_survival},
           {"action_fraction", c.action_fraction},
           {"action_week_mean", c.action_week_mean},
           {"action_week_sd", c.action_week_sd},
           {"action_step", c.action_step}};
    j["dropout_hazard"] = c.dropout_hazard ? json(*c.dropout_hazard) : json(nullptr);
    return j;
}

StressRating discretize_rating(double latent, double dither) {
    const double v = std::floor(latent + dither);
    return rating_from_intensity(static_cast<int>(std::clamp(v, 0.0, 4.0)));
}

FrequencyChoice discretize_frequency(double latent, double dither) {
    const double v = std::floor(latent + dither);
    return frequency_from_value(static_cast<int>(std::clamp(v, 1.0, 4.0)));
}

namespace {

struct Generator {
    const SimConfig& cfg;
    Dataset& out;
    std::vector<std::string> stressor_rank = ranked_stressors();
    std::vector<double> stressor_w = zipf_weights(stressor_rank.size(), cfg.stressor_zipf_exponent);
    std::vector<double> place_w = zipf_weights(kPlaceNames.size(), cfg.location_zipf_exponent);

    void participant(int i);
};

void Generator::participant(int i) {
    Rng rng(stats::substream_seed(cfg.seed, static_cast<std::uint64_t>(i) + 1));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> stdn(0.0, 1.0);

    ParticipantTruth t;
    t.participant_id = participant_name(i);
    const auto& pid = t.participant_id;
    t.enrollment_day = cfg.start_day + std::uniform_int_distribution<int>(0, cfg.enrollment_spread_days)(rng);
    t.tz_offset_min = cfg.tz_offsets_min[std::uniform_int_distribution<std::size_t>(0, cfg.tz_offsets_min.size() - 1)(rng)];
    const double survive = 1.0 - cfg.daily_hazard();
    while (t.last_active_day < cfg.n_days() - 1 && unif(rng) < survive) ++t.last_active_day;
    const double sd = cfg.events_per_day_sd;
    t.events_per_day = cfg.events_per_day * std::exp(sd * stdn(rng) - sd * sd / 2.0);
    {
        const double c = cfg.response_rate_concentration;
        t.response_rate = beta_draw(rng, std::max(1e-3, cfg.response_rate * c), std::max(1e-3, (1.0 - cfg.response_rate) * c));
    }
    t.intensity_baseline = cfg.intensity_baseline_mean + cfg.intensity_baseline_sd * stdn(rng);
    t.intensity_slope = cfg.intensity_slope_mean + cfg.intensity_slope_sd * stdn(rng);
    t.frequency_baseline = cfg.frequency_baseline_mean + cfg.frequency_baseline_sd * stdn(rng);
    t.frequency_slope = cfg.frequency_slope_mean + cfg.frequency_slope_sd * stdn(rng);
    if (unif(rng) < cfg.action_fraction && cfg.n_weeks >= 3) {
        const double w = std::round(cfg.action_week_mean + cfg.action_week_sd * stdn(rng));
        t.action_week = static_cast<int>(std::clamp(w, 2.0, static_cast<double>(cfg.n_weeks - 1)));
    }

    // Places: shared names, personal coordinates around a home base.
    const GeoPoint home{40.0 + 0.5 * stdn(rng), -83.0 + 0.5 * stdn(rng)};
    std::vector<Place> places;
    for (const auto& name : kPlaceNames) {
        places.push_back({name, GeoPoint{home.lat + 0.02 * stdn(rng), home.lon + 0.02 * stdn(rng)}});
    }
    places[0].gps = home;
    std::discrete_distribution<std::size_t> pick_place(place_w.begin(), place_w.end());
    std::discrete_distribution<std::size_t> pick_stressor(stressor_w.begin(), stressor_w.end());

    const StudyClock clock{pid, t.enrollment_day};
    auto week_of = [&](Timestamp ts) { return clock.week_index_at(ts, t.tz_offset_min); };

    // Physiological events.
    struct DayEvent {
        PhysiologicalEvent event;
        std::size_t place = 0;
        int day = 0;
    };
    std::vector<DayEvent> evs;
    std::vector<double> daily_noise(static_cast<std::size_t>(cfg.n_days()));
    for (auto& v : daily_noise) v = cfg.intensity_daily_sd * stdn(rng);
    const double mu_log = std::log(cfg.duration_median_min * 60.0);
    std::lognormal_distribution<double> dur(mu_log, cfg.duration_log_sd);
    std::poisson_distribution<int> n_events(t.events_per_day);
    int seq = 0;
    for (int d = 0; d <= t.last_active_day; ++d) {
        if (unif(rng) < cfg.nonwear_day_prob) continue;
        const Timestamp midnight = local_midnight(t.enrollment_day + d, t.tz_offset_min);
        const Timestamp wake = midnight + cfg.wake_hour * kSecondsPerHour;
        const Timestamp sleep = midnight + cfg.sleep_hour * kSecondsPerHour;
        const int n = n_events(rng);
        std::vector<Timestamp> starts(static_cast<std::size_t>(n));
        std::uniform_int_distribution<Timestamp> when(wake, sleep - 1);
        for (auto& s : starts) s = when(rng);
        std::sort(starts.begin(), starts.end());
        Timestamp prev_end = wake - 60;
        for (Timestamp s : starts) {
            const Timestamp length = std::max<Timestamp>(60, static_cast<Timestamp>(std::llround(dur(rng))));
            const double w = unif(rng);
            const double score01 = w < cfg.score_mix_weight ? beta_draw(rng, cfg.score_a1, cfg.score_b1)
                                                           : beta_draw(rng, cfg.score_a2, cfg.score_b2);
            const std::size_t place = pick_place(rng);
            s = std::max(s, prev_end + 60);
            if (s >= sleep + kSecondsPerHour) break;
            PhysiologicalEvent e;
            e.event_id = event_name(pid, ++seq);
            e.participant_id = pid;
            e.start = s;
            e.end = s + length;
            e.score = std::round(score01 * 1000.0) / 10.0;
            e.tz_offset_min = t.tz_offset_min;
            e.location = places[place].gps;
            prev_end = e.end;
            evs.push_back({std::move(e), place, d});
        }
    }

    // Prompting, responses and stressor entry.
    events::PromptEngine engine(pid, cfg.engine);
    std::exponential_distribution<double> delay(1.0 / std::max(1.0, cfg.response_delay_mean_s));
    std::vector<std::string> novel_pool;
    auto choose_stressor = [&]() -> std::string {
        if (unif(rng) < cfg.novel_stressor_prob) {
            if (!novel_pool.empty() && unif(rng) < 0.3) {
                return novel_pool[std::uniform_int_distribution<std::size_t>(0, novel_pool.size() - 1)(rng)];
            }
            const auto& q = kNovelQualifiers[std::uniform_int_distribution<std::size_t>(0, kNovelQualifiers.size() - 1)(rng)];
            const auto& h = kNovelHeads[std::uniform_int_distribution<std::size_t>(0, kNovelHeads.size() - 1)(rng)];
            const auto& c = kNovelContexts[std::uniform_int_distribution<std::size_t>(0, kNovelContexts.size() - 1)(rng)];
            novel_pool.push_back(q + h + c);
            return novel_pool.back();
        }
        return stressor_rank[pick_stressor(rng)];
    };
    auto latent_at = [&](int week, int day) {
        return t.intensity_baseline + t.intensity_slope * (week - 1) + (week == 1 ? cfg.initial_elevation : 0.0) +
               daily_noise[static_cast<std::size_t>(day)] + cfg.intensity_event_sd * stdn(rng);
    };
    int episodes = 0;
    // privacy edits reach the engine in time order, as they would in the service
    std::priority_queue<std::pair<Timestamp, EventId>, std::vector<std::pair<Timestamp, EventId>>, std::greater<>> edits;
    for (const auto& de : evs) {
        while (!edits.empty() && edits.top().first < de.event.end) {
            engine.set_private(edits.top().second, true);
            edits.pop();
        }
        const auto res = engine.ingest(de.event, de.event.end);
        out.events.push_back(de.event);
        if (!res.ticket) continue;
        const auto& ticket = *res.ticket;
        if (unif(rng) >= t.response_rate) continue;
        const Timestamp lag = std::clamp<Timestamp>(static_cast<Timestamp>(std::llround(delay(rng))), 1,
                                                    ticket.expires_at - ticket.issued_at - 600);
        StressAnnotation a;
        a.event_id = de.event.event_id;
        a.participant_id = pid;
        a.created_at = ticket.issued_at + lag;
        RatingTruth truth{latent_at(week_of(de.event.start), de.day), unif(rng)};
        a.rating = discretize_rating(truth.latent, truth.dither);
        out.rating_truth[a.event_id] = truth;
        engine.mark_responded(a.event_id);
        if (requires_stressor(a.rating) && unif(rng) < cfg.stressor_completion_prob) {
            ++episodes;
            a.stressor_text = annotations::normalize_stressor(choose_stressor());
            if (unif(rng) < 0.92) a.semantic_location = places[de.place].name;
            a.gps = de.event.location;
            const double secs = cfg.entry_time_intercept_s + cfg.entry_time_slope_s * (episodes - 1) +
                                cfg.entry_time_noise_s * stdn(rng);
            a.entry_duration_s = static_cast<std::int64_t>(std::llround(std::max(cfg.entry_time_floor_s, secs)));
            a.revision = 2;
        }
        if (unif(rng) < cfg.private_prob) {
            a.is_private = true;
            const Timestamp done = a.created_at + a.entry_duration_s.value_or(0);
            a.edited_at = done + std::uniform_int_distribution<Timestamp>(kSecondsPerHour, 48 * kSecondsPerHour)(rng);
            a.revision += 1;
            edits.emplace(*a.edited_at, a.event_id);
        }
        out.annotations.push_back(std::move(a));
    }
    for (const auto& [id, ticket] : engine.tickets()) out.tickets.push_back(ticket);

    // Manual reports. Ids follow the annotation store's numbering (order of
    // reporting) so a replay through the service reproduces them.
    std::poisson_distribution<int> n_manual(cfg.manual_reports_per_day);
    const std::size_t m0 = out.manual_events.size(), a0 = out.annotations.size();
    for (int d = 0; d <= t.last_active_day; ++d) {
        const int n = n_manual(rng);
        const Timestamp midnight = local_midnight(t.enrollment_day + d, t.tz_offset_min);
        for (int k = 0; k < n; ++k) {
            const Timestamp at = midnight + cfg.wake_hour * kSecondsPerHour +
                                 std::uniform_int_distribution<Timestamp>(0, (cfg.sleep_hour - cfg.wake_hour) * kSecondsPerHour - 1)(rng);
            const Timestamp reported = at + std::uniform_int_distribution<Timestamp>(5 * 60, 3 * kSecondsPerHour)(rng);
            const std::size_t place = pick_place(rng);
            PhysiologicalEvent e;
            e.participant_id = pid;
            e.start = at;
            e.end = at + 5 * 60;
            e.tz_offset_min = t.tz_offset_min;
            e.source = EventSource::Manual;
            e.location = places[place].gps;
            StressAnnotation a;
            a.event_id = e.event_id;
            a.participant_id = pid;
            a.rating = unif(rng) < 0.5 ? StressRating::Stressed : StressRating::ProbablyStressed;
            a.stressor_text = annotations::normalize_stressor(choose_stressor());
            a.semantic_location = places[place].name;
            a.gps = e.location;
            a.is_manual = true;
            a.created_at = reported;
            out.manual_events.push_back(std::move(e));
            out.annotations.push_back(std::move(a));
        }
    }
    {
        std::vector<std::size_t> order(out.manual_events.size() - m0);
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return out.annotations[a0 + x].created_at < out.annotations[a0 + y].created_at;
        });
        int seq = 0;
        for (const std::size_t k : order) {
            auto& e = out.manual_events[m0 + k];
            e.event_id = "manual-" + pid + "-" + std::to_string(e.start) + "-" + std::to_string(++seq);
            out.annotations[a0 + k].event_id = e.event_id;
        }
    }

    // Weekly surveys.
    surveys::SurveyEngine schedule(clock);
    schedule.set_tz_offset(t.tz_offset_min);
    const Timestamp active_until = local_midnight(t.enrollment_day + t.last_active_day + 1, t.tz_offset_min);
    for (int w = 1; w <= cfg.n_weeks; ++w) {
        const Timestamp due = schedule.due_at(w);
        const double f_latent = t.frequency_baseline + t.frequency_slope * (w - 1) +
                                (w == 1 ? cfg.frequency_initial_elevation : 0.0) + cfg.frequency_weekly_sd * stdn(rng);
        const double dither = unif(rng);
        const double ease = cfg.recall_ease_mean + cfg.recall_ease_sd * stdn(rng);
        const double respond = unif(rng);
        const Timestamp lag = std::uniform_int_distribution<Timestamp>(60, 40 * kSecondsPerHour)(rng);
        std::set<VizImpact> impacts;
        for (auto imp : {VizImpact::AwarenessOfPatterns, VizImpact::ContextualUnderstanding, VizImpact::MotivatedToReduce,
                         VizImpact::SawReduction, VizImpact::ReinforcedBenefit}) {
            if (unif(rng) < 0.25) impacts.insert(imp);
        }
        if (due >= active_until || respond >= cfg.survey_response_prob) continue;
        if (w == t.action_week) impacts.insert(VizImpact::TookSpecificAction);
        if (impacts.empty()) impacts.insert(VizImpact::None);
        WeeklySurvey s;
        s.participant_id = pid;
        s.week_index = w;
        s.frequency = discretize_frequency(f_latent, dither);
        s.recall_ease = static_cast<int>(std::clamp(std::round(ease), 1.0, 5.0));
        s.viz_impacts = std::move(impacts);
        s.submitted_at = due + lag;
        s.late = s.submitted_at > schedule.closes_at(w);
        out.survey_truth[{pid, w}] = SurveyTruth{f_latent, dither};
        out.surveys.push_back(std::move(s));
    }

    out.participants.push_back(std::move(t));
}

void realize_daily_sd(Dataset& data) {
    std::map<ParticipantId, std::map<std::int64_t, std::pair<double, int>>> days;
    std::map<EventId, const PhysiologicalEvent*> by_id;
    for (const auto& e : data.events) by_id[e.event_id] = &e;
    for (const auto& a : data.annotations) {
        if (a.is_manual) continue;
        auto it = by_id.find(a.event_id);
        if (it == by_id.end()) continue;
        auto& [sum, n] = days[a.participant_id][local_day(it->second->start, it->second->tz_offset_min)];
        sum += rating_to_intensity(a.rating);
        n += 1;
    }
    for (auto& p : data.participants) {
        std::vector<double> means;
        for (const auto& [d, sn] : days[p.participant_id]) means.push_back(sn.first / sn.second);
        if (means.size() < 2) {
            p.daily_intensity_sd = 0.0;
            continue;
        }
        double m = 0.0;
        for (double v : means) m += v;
        m /= static_cast<double>(means.size());
        double ss = 0.0;
        for (double v : means) ss += (v - m) * (v - m);
        p.daily_intensity_sd = std::sqrt(ss / static_cast<double>(means.size()));
    }
}

}  // namespace

Dataset simulate(const SimConfig& config) {
    config.validate();
    Dataset data;
    data.config = config;
    Generator gen{config, data};
    for (int i = 0; i < config.n_participants; ++i) gen.participant(i);
    realize_daily_sd(data);
    if (config.action_step != 0.0) inject_action_effect(data, config.action_step);
    return data;
}

void inject_action_effect(Dataset& data, double step, const std::vector<ParticipantId>& subcohort) {
    std::map<ParticipantId, ParticipantTruth*> chosen;
    for (auto& p : data.participants) {
        if (p.action_week == 0) continue;
        if (!subcohort.empty() && std::find(subcohort.begin(), subcohort.end(), p.participant_id) == subcohort.end()) continue;
        chosen[p.participant_id] = &p;
    }
    std::map<EventId, const PhysiologicalEvent*> by_id;
    for (const auto& e : data.events) by_id[e.event_id] = &e;
    for (auto& [pid, p] : chosen) p->action_shift = step * p->daily_intensity_sd;
    for (auto& a : data.annotations) {
        if (a.is_manual) continue;
        auto pit = chosen.find(a.participant_id);
        if (pit == chosen.end()) continue;
        const ParticipantTruth& p = *pit->second;
        auto eit = by_id.find(a.event_id);
        auto tit = data.rating_truth.find(a.event_id);
        if (eit == by_id.end() || tit == data.rating_truth.end()) continue;
        const StudyClock clock{p.participant_id, p.enrollment_day};
        if (clock.week_index_at(eit->second->start, eit->second->tz_offset_min) <= p.action_week) continue;
        tit->second.latent += p.action_shift;
        a.rating = discretize_rating(tit->second.latent, tit->second.dither);
        if (!requires_stressor(a.rating) && a.stressor_text) {
            // The entry form only appears for ratings that ask for a stressor.
            if (a.revision > 1) a.revision -= 1;
            a.stressor_text.reset();
            a.semantic_location.reset();
            a.gps.reset();
            a.entry_duration_s.reset();
        }
    }
}

std::vector<Action> Dataset::timeline() const {
    std::vector<Action> out;
    for (std::size_t i = 0; i < events.size(); ++i) {
        out.push_back({events[i].end, ActionKind::Event, events[i].participant_id, i});
    }
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        const auto& a = annotations[i];
        if (a.is_manual) {
            out.push_back({a.created_at, ActionKind::Manual, a.participant_id, i});
        } else {
            out.push_back({a.created_at, ActionKind::Rating, a.participant_id, i});
            if (a.has_stressor()) {
                out.push_back({a.created_at + a.entry_duration_s.value_or(0), ActionKind::Completion, a.participant_id, i});
            }
        }
        if (a.is_private && a.edited_at) out.push_back({*a.edited_at, ActionKind::MakePrivate, a.participant_id, i});
    }
    for (std::size_t i = 0; i < surveys.size(); ++i) {
        out.push_back({surveys[i].submitted_at, ActionKind::Survey, surveys[i].participant_id, i});
    }
    std::stable_sort(out.begin(), out.end(), [](const Action& x, const Action& y) {
        if (x.at != y.at) return x.at < y.at;
        if (x.kind != y.kind) return x.kind < y.kind;
        if (x.participant_id != y.participant_id) return x.participant_id < y.participant_id;
        return x.index < y.index;
    });
    return out;
}

void to_json(json& j, const ParticipantTruth& t) {
    j = json{{"participant_id", t.participant_id},
             {"enrollment_day", t.enrollment_day},
             {"tz_offset_min", t.tz_offset_min},
             {"last_active_day", t.last_active_day},
             {"events_per_day", t.events_per_day},
             {"response_rate", t.response_rate},
             {"intensity_baseline", t.intensity_baseline},
             {"intensity_slope", t.intensity_slope},
             {"frequency_baseline", t.frequency_baseline},
             {"frequency_slope", t.frequency_slope},
             {"action_week", t.action_week},
             {"action_shift", t.action_shift},
             {"daily_intensity_sd", t.daily_intensity_sd}};
}

void from_json(const json& j, ParticipantTruth& t) {
    j.at("participant_id").get_to(t.participant_id);
    j.at("enrollment_day").get_to(t.enrollment_day);
    j.at("tz_offset_min").get_to(t.tz_offset_min);
    j.at("last_active_day").get_to(t.last_active_day);
    j.at("events_per_day").get_to(t.events_per_day);
    j.at("response_rate").get_to(t.response_rate);
    j.at("intensity_baseline").get_to(t.intensity_baseline);
    j.at("intensity_slope").get_to(t.intensity_slope);
    j.at("frequency_baseline").get_to(t.frequency_baseline);
    j.at("frequency_slope").get_to(t.frequency_slope);
    j.at("action_week").get_to(t.action_week);
    t.action_shift = j.value("action_shift", 0.0);
    t.daily_intensity_sd = j.value("daily_intensity_sd", 0.0);
}

namespace {

template <typename T>
void write_file(const std::filesystem::path& path, const std::vector<T>& items) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Validation, "cannot write " + path.string());
    write_lines(out, items);
}

template <typename T>
std::vector<T> read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "missing " + path.string());
    return read_lines<T>(in);
}

}  // namespace

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "config.json", std::ios::trunc);
        out << config_to_json(data.config).dump(2) << '\n';
    }
    write_file(dir / "participants.jsonl", data.participants);
    write_file(dir / "events.jsonl", data.events);
    write_file(dir / "tickets.jsonl", data.tickets);
    write_file(dir / "annotations.jsonl", data.annotations);
    write_file(dir / "manual_events.jsonl", data.manual_events);
    write_file(dir / "surveys.jsonl", data.surveys);
}

Dataset read_dataset(const std::filesystem::path& dir) {
    Dataset d;
    d.config = load_config(dir / "config.json");
    d.participants = read_file<ParticipantTruth>(dir / "participants.jsonl");
    d.events = read_file<PhysiologicalEvent>(dir / "events.jsonl");
    d.tickets = read_file<events::PromptTicket>(dir / "tickets.jsonl");
    d.annotations = read_file<StressAnnotation>(dir / "annotations.jsonl");
    d.manual_events = read_file<PhysiologicalEvent>(dir / "manual_events.jsonl");
    d.surveys = read_file<WeeklySurvey>(dir / "surveys.jsonl");
    return d;
}

}  // namespace moods::sim
