#include "moods/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "moods/simulator.hpp"
#include "moods/stats/distributions.hpp"
#include "moods/storage.hpp"

namespace moods::analysis {

namespace {

std::map<ParticipantId, const ParticipantInfo*> info_index(const StudyData& data) {
    std::map<ParticipantId, const ParticipantInfo*> out;
    for (const auto& p : data.participants) out[p.participant_id] = &p;
    return out;
}

std::map<EventId, const PhysiologicalEvent*> event_index(const StudyData& data) {
    std::map<EventId, const PhysiologicalEvent*> out;
    for (const auto& e : data.events) out[e.event_id] = &e;
    return out;
}

// Prompted, non-private ratings joined with their events.
struct Rated {
    const StressAnnotation* a;
    const PhysiologicalEvent* e;
    const ParticipantInfo* p;
};

std::vector<Rated> prompted_ratings(const StudyData& data) {
    const auto infos = info_index(data);
    const auto evs = event_index(data);
    std::vector<Rated> out;
    for (const auto& a : data.annotations) {
        if (a.is_manual || a.is_private) continue;
        auto e = evs.find(a.event_id);
        auto p = infos.find(a.participant_id);
        if (e == evs.end() || p == infos.end()) continue;
        if (e->second->source != EventSource::Detected) continue;
        out.push_back({&a, e->second, p->second});
    }
    return out;
}

std::vector<ParticipantWeek> collect(std::map<std::pair<ParticipantId, int>, ParticipantWeek>& acc) {
    std::vector<ParticipantWeek> out;
    out.reserve(acc.size());
    for (auto& [key, pw] : acc) out.push_back(std::move(pw));
    return out;
}

json round6(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::round(v * 1e6) / 1e6;
}

}  // namespace

StudyData from_dataset(const sim::Dataset& data) {
    StudyData out;
    out.n_weeks = data.config.n_weeks;
    for (const auto& p : data.participants) out.participants.push_back({p.participant_id, p.enrollment_day, p.tz_offset_min});
    out.events = data.events;
    out.events.insert(out.events.end(), data.manual_events.begin(), data.manual_events.end());
    out.tickets = data.tickets;
    out.annotations = data.annotations;
    out.surveys = data.surveys;
    return out;
}

StudyData load_study(const std::filesystem::path& dir) {
    if (std::filesystem::exists(dir / "events.jsonl")) return from_dataset(sim::read_dataset(dir));
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::NotFound, "no study data at " + dir.string());
    storage::Store store(dir);
    StudyData out;
    int max_week = 1;
    for (const auto& pid : store.participants()) {
        const auto state = store.open(pid).state();
        if (!state->participant) continue;
        out.participants.push_back({pid, state->participant->enrollment_day, state->participant->tz_offset_min});
        for (const auto& [id, e] : state->events) out.events.push_back(e);
        for (const auto& [id, t] : state->tickets) out.tickets.push_back(t);
        for (const auto& [id, a] : state->annotations) out.annotations.push_back(a);
        for (const auto& [w, s] : state->surveys) out.surveys.push_back(s);
        const StudyClock clock{pid, state->participant->enrollment_day};
        for (const auto& [id, e] : state->events) max_week = std::max(max_week, clock.week_index_at(e.start, e.tz_offset_min));
    }
    out.n_weeks = max_week;
    return out;
}

const char* metric_name(Metric m) noexcept {
    switch (m) {
        case Metric::Intensity: return "intensity";
        case Metric::Frequency: return "frequency";
        case Metric::RecallEase: return "recall_ease";
    }
    return "intensity";
}

Metric parse_metric(std::string_view name) {
    if (name == "intensity") return Metric::Intensity;
    if (name == "frequency") return Metric::Frequency;
    if (name == "recall_ease") return Metric::RecallEase;
    throw Error(ErrorCode::Validation, "unknown metric '" + std::string(name) + "'");
}

const char* weighting_name(Weighting w) noexcept {
    return w == Weighting::Pooled ? "pooled" : "participant_mean";
}

Weighting parse_weighting(std::string_view name) {
    if (name == "participant_mean") return Weighting::ParticipantMean;
    if (name == "pooled") return Weighting::Pooled;
    throw Error(ErrorCode::Validation, "unknown weighting '" + std::string(name) + "'");
}

std::vector<ParticipantWeek> weekly_intensity(const StudyData& data) {
    std::map<std::pair<ParticipantId, int>, ParticipantWeek> acc;
    for (const auto& r : prompted_ratings(data)) {
        const StudyClock clock{r.p->participant_id, r.p->enrollment_day};
        const int w = clock.week_index_at(r.e->start, r.e->tz_offset_min);
        auto& pw = acc[{r.p->participant_id, w}];
        pw.participant_id = r.p->participant_id;
        pw.week = w;
        pw.sum += rating_to_intensity(r.a->rating);
        pw.n += 1;
    }
    return collect(acc);
}

namespace {
std::vector<ParticipantWeek> survey_series(const StudyData& data, bool frequency) {
    std::map<std::pair<ParticipantId, int>, ParticipantWeek> acc;
    for (const auto& s : data.surveys) {
        auto& pw = acc[{s.participant_id, s.week_index}];
        pw.participant_id = s.participant_id;
        pw.week = s.week_index;
        pw.sum += frequency ? s.frequency_value() : s.recall_ease;
        pw.n += 1;
    }
    return collect(acc);
}
}  // namespace

std::vector<ParticipantWeek> weekly_frequency(const StudyData& data) { return survey_series(data, true); }
std::vector<ParticipantWeek> weekly_recall_ease(const StudyData& data) { return survey_series(data, false); }

std::vector<ParticipantWeek> weekly_series(const StudyData& data, Metric metric) {
    switch (metric) {
        case Metric::Intensity: return weekly_intensity(data);
        case Metric::Frequency: return weekly_frequency(data);
        case Metric::RecallEase: return weekly_recall_ease(data);
    }
    return {};
}

std::vector<ParticipantWeek> read_weekly_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    std::map<std::pair<ParticipantId, int>, ParticipantWeek> acc;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, sep);) cols.push_back(c);
        if (cols.size() < 3) throw Error(ErrorCode::Validation, "line " + std::to_string(line_no) + ": expected 3 columns");
        int week = 0;
        double value = 0.0;
        try {
            std::size_t used = 0;
            week = std::stoi(cols[1], &used);
            value = std::stod(cols[2]);
        } catch (const std::exception&) {
            if (line_no == 1) continue;  // header
            throw Error(ErrorCode::Validation, "line " + std::to_string(line_no) + ": bad week or value");
        }
        if (week < 1) throw Error(ErrorCode::Validation, "line " + std::to_string(line_no) + ": week must be >= 1");
        auto& pw = acc[{cols[0], week}];
        pw.participant_id = cols[0];
        pw.week = week;
        pw.sum += value;
        pw.n += 1;
    }
    return collect(acc);
}

WeeklyMeans cohort_weekly_means(const std::vector<ParticipantWeek>& pw, Weighting weighting) {
    std::map<int, std::tuple<double, double, int>> acc;  // numerator, denominator, participants
    for (const auto& x : pw) {
        if (x.n <= 0) continue;
        auto& [num, den, k] = acc[x.week];
        if (weighting == Weighting::Pooled) {
            num += x.sum;
            den += x.n;
        } else {
            num += x.mean();
            den += 1.0;
        }
        k += 1;
    }
    WeeklyMeans out;
    for (const auto& [w, t] : acc) {
        out.weeks.push_back(w);
        out.means.push_back(std::get<0>(t) / std::get<1>(t));
        out.participants.push_back(std::get<2>(t));
    }
    return out;
}

TrendAnalysis trend_analysis(const std::vector<ParticipantWeek>& pw, Metric metric, Weighting weighting, int first_week) {
    TrendAnalysis t;
    t.metric = metric;
    t.weighting = weighting;
    t.first_week = first_week;
    const auto all = cohort_weekly_means(pw, weighting);
    for (std::size_t i = 0; i < all.weeks.size(); ++i) {
        if (all.weeks[i] < first_week) continue;
        t.series.weeks.push_back(all.weeks[i]);
        t.series.means.push_back(all.means[i]);
        t.series.participants.push_back(all.participants[i]);
    }
    t.trend = stats::mann_kendall(t.series.means);
    return t;
}

LmmAnalysis lmm_analysis(const std::vector<ParticipantWeek>& pw, int min_weeks, const stats::LmmOptions& options) {
    std::vector<stats::LmmObservation> obs;
    for (const auto& x : pw) {
        if (x.n > 0) obs.push_back({x.participant_id, static_cast<double>(x.week - 1), x.mean()});
    }
    LmmAnalysis out;
    out.filter = stats::filter_lmm_participants(obs, min_weeks);
    out.fit = stats::fit_lmm(out.filter.kept, options);
    return out;
}

PairedComparison week_comparison(const std::vector<ParticipantWeek>& pw, int week_a, int week_b) {
    std::map<ParticipantId, double> a, b;
    for (const auto& x : pw) {
        if (x.n <= 0) continue;
        if (x.week == week_a) a[x.participant_id] = x.mean();
        if (x.week == week_b) b[x.participant_id] = x.mean();
    }
    std::vector<double> va, vb;
    for (const auto& [pid, v] : a) {
        if (auto it = b.find(pid); it != b.end()) {
            va.push_back(v);
            vb.push_back(it->second);
        }
    }
    PairedComparison c;
    c.week_a = week_a;
    c.week_b = week_b;
    c.n_pairs = va.size();
    if (va.empty()) throw Error(ErrorCode::InsufficientData, "no participant has both weeks");
    c.mean_a = stats::mean(va);
    c.mean_b = stats::mean(vb);
    c.test = stats::wilcoxon_signed_rank(va, vb);
    return c;
}

GroupComparison compare_groups(std::vector<double> a, std::vector<double> b, std::string label_a, std::string label_b) {
    GroupComparison g;
    g.label_a = std::move(label_a);
    g.label_b = std::move(label_b);
    if (a.size() < 3 || b.size() < 3) throw Error(ErrorCode::InsufficientData, "each group needs at least 3 values");
    g.normality_a = stats::shapiro_wilk(a);
    g.normality_b = stats::shapiro_wilk(b);
    g.normal = g.normality_a.p >= 0.05 && g.normality_b.p >= 0.05;
    g.test = stats::mann_whitney_u(a, b);
    g.a = std::move(a);
    g.b = std::move(b);
    return g;
}

std::map<ParticipantId, int> action_weeks(const StudyData& data) {
    std::map<ParticipantId, int> out;
    for (const auto& s : data.surveys) {
        if (!s.viz_impacts.count(VizImpact::TookSpecificAction)) continue;
        auto [it, inserted] = out.emplace(s.participant_id, s.week_index);
        if (!inserted) it->second = std::min(it->second, s.week_index);
    }
    return out;
}

GroupComparison action_group_slopes(const StudyData& data, int min_weeks) {
    std::map<ParticipantId, std::vector<std::pair<double, double>>> per;
    for (const auto& x : weekly_intensity(data)) per[x.participant_id].push_back({x.week, x.mean()});
    const auto acted = action_weeks(data);
    std::vector<double> a, b;
    for (const auto& [pid, pts] : per) {
        if (static_cast<int>(pts.size()) < min_weeks) continue;
        std::vector<double> xs, ys;
        for (const auto& [x, y] : pts) {
            xs.push_back(x);
            ys.push_back(y);
        }
        const double m = stats::theil_sen(xs, ys).m;
        (acted.count(pid) ? a : b).push_back(m);
    }
    return compare_groups(std::move(a), std::move(b), "took_action", "no_action");
}

std::map<ParticipantId, int> last_active_days(const StudyData& data) {
    const auto infos = info_index(data);
    std::map<ParticipantId, int> out;
    for (const auto& p : data.participants) out[p.participant_id] = 0;
    auto touch = [&](const ParticipantId& pid, Timestamp ts, int tz) {
        auto it = infos.find(pid);
        if (it == infos.end()) return;
        const auto d = static_cast<int>(local_day(ts, tz) - it->second->enrollment_day);
        auto& slot = out[pid];
        slot = std::max(slot, d);
    };
    for (const auto& e : data.events) touch(e.participant_id, e.start, e.tz_offset_min);
    for (const auto& a : data.annotations) {
        auto it = infos.find(a.participant_id);
        if (it != infos.end()) touch(a.participant_id, a.created_at, it->second->tz_offset_min);
    }
    return out;
}

stats::RetentionCurve retention(const StudyData& data, int horizon_days) {
    if (horizon_days < 0) horizon_days = 7 * data.n_weeks;
    std::vector<int> last;
    for (const auto& [pid, d] : last_active_days(data)) last.push_back(d);
    return stats::retention_curve(last, horizon_days);
}

FieldRates field_rates(const StudyData& data) {
    FieldRates r;
    const auto infos = info_index(data);
    std::set<std::pair<ParticipantId, std::int64_t>> days;
    for (const auto& t : data.tickets) {
        days.insert({t.participant_id, local_day(t.issued_at, t.tz_offset_min)});
        ++r.prompts;
        if (t.responded) ++r.responses;
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& a : data.annotations) {
        if (a.is_manual) ++r.manual_reports;
        if (a.is_private || !a.has_stressor()) continue;
        ++r.stressor_records;
        ++counts[*a.stressor_text];
    }
    r.prompted_days = days.size();
    r.unique_stressors = counts.size();
    if (r.prompted_days > 0) {
        const auto d = static_cast<double>(r.prompted_days);
        r.prompts_per_day = r.prompts / d;
        r.responses_per_day = r.responses / d;
        r.stressors_per_day = r.stressor_records / d;
    }
    if (r.prompts > 0) r.response_rate = static_cast<double>(r.responses) / r.prompts;
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (ranked.size() > 10) ranked.resize(10);
    r.top_stressors = std::move(ranked);
    return r;
}

EntryTimeAnalysis entry_time_trend(const StudyData& data, int max_episode) {
    std::map<ParticipantId, std::vector<std::pair<Timestamp, double>>> per;
    for (const auto& a : data.annotations) {
        if (a.is_manual || !a.entry_duration_s || !a.has_stressor()) continue;
        per[a.participant_id].push_back({a.created_at + *a.entry_duration_s, static_cast<double>(*a.entry_duration_s)});
    }
    std::map<int, std::pair<double, int>> acc;
    for (auto& [pid, xs] : per) {
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k < xs.size() && static_cast<int>(k) < max_episode; ++k) {
            acc[static_cast<int>(k) + 1].first += xs[k].second;
            acc[static_cast<int>(k) + 1].second += 1;
        }
    }
    EntryTimeAnalysis e;
    for (const auto& [k, sn] : acc) {
        e.episode.push_back(k);
        e.mean_s.push_back(sn.first / sn.second);
        e.participants.push_back(sn.second);
    }
    e.trend = stats::mann_kendall(e.mean_s);
    return e;
}

std::vector<stats::ItsParticipant> its_cohort(const StudyData& data, const std::map<ParticipantId, int>& weeks) {
    std::map<ParticipantId, std::map<std::int64_t, std::pair<double, int>>> daily;
    std::map<ParticipantId, const ParticipantInfo*> infos;
    for (const auto& r : prompted_ratings(data)) {
        if (!weeks.count(r.p->participant_id)) continue;
        infos[r.p->participant_id] = r.p;
        auto& [sum, n] = daily[r.p->participant_id][local_day(r.e->start, r.e->tz_offset_min)];
        sum += rating_to_intensity(r.a->rating);
        n += 1;
    }
    std::vector<stats::ItsParticipant> out;
    for (const auto& [pid, week] : weeks) {
        stats::ItsParticipant p;
        p.participant = pid;
        p.action_week = week;
        if (auto it = daily.find(pid); it != daily.end()) {
            const StudyClock clock{pid, infos[pid]->enrollment_day};
            for (const auto& [day, sn] : it->second) {
                p.days.push_back({day, clock.week_index(day), sn.first / sn.second});
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

ItsAnalysis its_analysis(const StudyData& data, const stats::ItsOptions& options) {
    ItsAnalysis out;
    out.action_weeks = action_weeks(data);
    const auto cohort = its_cohort(data, out.action_weeks);
    out.report = stats::interrupted_time_series(cohort, options);
    return out;
}

stats::BootstrapBand weekly_bootstrap(const std::vector<ParticipantWeek>& pw, int n_weeks, int resamples,
                                      std::uint64_t seed) {
    std::map<ParticipantId, std::size_t> ids;
    for (const auto& x : pw) ids.emplace(x.participant_id, 0);
    std::size_t next = 0;
    for (auto& [pid, idx] : ids) idx = next++;
    // unit -> week -> participant mean
    std::vector<std::map<int, double>> units(ids.size());
    for (const auto& x : pw) {
        if (x.n > 0 && x.week >= 1 && x.week <= n_weeks) units[ids[x.participant_id]][x.week] = x.mean();
    }
    auto fit = [&](std::span<const std::size_t> sample) {
        std::vector<double> sum(static_cast<std::size_t>(n_weeks), 0.0);
        std::vector<int> cnt(static_cast<std::size_t>(n_weeks), 0);
        for (std::size_t u : sample) {
            for (const auto& [w, v] : units[u]) {
                sum[static_cast<std::size_t>(w - 1)] += v;
                cnt[static_cast<std::size_t>(w - 1)] += 1;
            }
        }
        for (std::size_t w = 0; w < sum.size(); ++w) {
            if (cnt[w] == 0) throw Error(ErrorCode::InsufficientData, "week without data in resample");
            sum[w] /= cnt[w];
        }
        return sum;
    };
    return stats::bootstrap_band(units.size(), fit, resamples, seed);
}

json to_json(const TrendAnalysis& t) {
    json series = json::array();
    for (std::size_t i = 0; i < t.series.weeks.size(); ++i) {
        series.push_back({{"week", t.series.weeks[i]},
                          {"mean", round6(t.series.means[i])},
                          {"participants", t.series.participants[i]}});
    }
    return json{{"metric", metric_name(t.metric)},
                {"weighting", weighting_name(t.weighting)},
                {"first_week", t.first_week},
                {"weekly", series},
                {"trend", t.trend}};
}

json to_json(const LmmAnalysis& l) {
    return json{{"fit", l.fit}, {"dropped_participants", l.filter.dropped}};
}

json to_json(const PairedComparison& c) {
    return json{{"week_a", c.week_a}, {"week_b", c.week_b}, {"n_pairs", c.n_pairs},
                {"mean_a", round6(c.mean_a)}, {"mean_b", round6(c.mean_b)}, {"wilcoxon", c.test}};
}

json to_json(const GroupComparison& g) {
    return json{{"group_a", {{"label", g.label_a}, {"n", g.a.size()}, {"median", round6(stats::median(g.a))}, {"shapiro_wilk", g.normality_a}}},
                {"group_b", {{"label", g.label_b}, {"n", g.b.size()}, {"median", round6(stats::median(g.b))}, {"shapiro_wilk", g.normality_b}}},
                {"both_normal", g.normal},
                {"mann_whitney", g.test}};
}

json to_json(const FieldRates& r) {
    json top = json::array();
    for (const auto& [s, n] : r.top_stressors) top.push_back({{"stressor", s}, {"count", n}});
    return json{{"prompted_days", r.prompted_days},
                {"prompts", r.prompts},
                {"responses", r.responses},
                {"stressor_records", r.stressor_records},
                {"unique_stressors", r.unique_stressors},
                {"manual_reports", r.manual_reports},
                {"prompts_per_day", round6(r.prompts_per_day)},
                {"responses_per_day", round6(r.responses_per_day)},
                {"response_rate", round6(r.response_rate)},
                {"stressors_per_day", round6(r.stressors_per_day)},
                {"top_stressors", top}};
}

json to_json(const EntryTimeAnalysis& e) {
    json pts = json::array();
    for (std::size_t i = 0; i < e.episode.size(); ++i) {
        pts.push_back({{"episode", e.episode[i]}, {"mean_s", round6(e.mean_s[i])}, {"participants", e.participants[i]}});
    }
    return json{{"episodes", pts}, {"trend", e.trend}};
}

json to_json(const ItsAnalysis& i) {
    return json{{"action_weeks", i.action_weeks}, {"its", i.report}};
}

namespace {

template <typename F>
json guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientData) throw;
        return json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}};
    }
}

json header(const StudyData& data, const char* kind) {
    return json{{"schema", kReportSchema}, {"kind", kind}, {"n_participants", data.participants.size()},
                {"n_weeks", data.n_weeks}};
}

}  // namespace

json trend_document(const StudyData& data, Metric metric, const ReportOptions& options) {
    const auto pw = weekly_series(data, metric);
    json doc;
    doc["all_weeks"] = guarded([&] { return to_json(trend_analysis(pw, metric, options.weighting, 1)); });
    doc["excluding_first_week"] = guarded([&] { return to_json(trend_analysis(pw, metric, options.weighting, 2)); });
    if (options.bootstrap_resamples > 0) {
        doc["bootstrap"] = guarded([&] {
            return json(weekly_bootstrap(pw, data.n_weeks, options.bootstrap_resamples, options.bootstrap_seed));
        });
    }
    return doc;
}

json trends_report(const StudyData& data, const ReportOptions& options) {
    json doc = header(data, "trends");
    doc["intensity"] = trend_document(data, Metric::Intensity, options);
    doc["frequency"] = trend_document(data, Metric::Frequency, options);
    return doc;
}

json lmm_report(const StudyData& data, const ReportOptions& options) {
    json doc = header(data, "lmm");
    for (Metric m : {Metric::Intensity, Metric::Frequency}) {
        doc[metric_name(m)] = guarded([&] { return to_json(lmm_analysis(weekly_series(data, m), options.lmm_min_weeks)); });
    }
    return doc;
}

json its_report(const StudyData& data, const ReportOptions& options) {
    json doc = header(data, "its");
    doc["result"] = guarded([&] { return to_json(its_analysis(data, options.its)); });
    return doc;
}

json retention_report(const StudyData& data) {
    json doc = header(data, "retention");
    doc["retention"] = retention(data);
    doc["field_rates"] = to_json(field_rates(data));
    return doc;
}

json full_report(const StudyData& data, const ReportOptions& options) {
    json doc = header(data, "full");
    doc["trends"] = trends_report(data, options);
    doc["lmm"] = lmm_report(data, options);
    doc["its"] = its_report(data, options);
    doc["retention"] = retention(data);
    doc["field_rates"] = to_json(field_rates(data));
    const auto intensity = weekly_intensity(data);
    doc["baseline"] = guarded([&] { return to_json(week_comparison(intensity, 1, options.baseline_week_b)); });
    doc["action_groups"] = guarded([&] { return to_json(action_group_slopes(data)); });
    doc["entry_time"] = guarded([&] { return to_json(entry_time_trend(data)); });
    doc["recall_ease"] = guarded([&] {
        return to_json(trend_analysis(weekly_recall_ease(data), Metric::RecallEase, options.weighting, 1));
    });
    return doc;
}

}  // namespace moods::analysis

namespace moods::stats {

namespace {
json r6(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::round(v * 1e9) / 1e9;
}
// p-values keep full precision, tiny ones matter
json pval(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}
}  // namespace

void to_json(json& j, const TrendReport& t) {
    j = json{{"m", r6(t.m)}, {"b", r6(t.b)}, {"S", t.s}, {"var_S", r6(t.var_s)},
             {"Z", r6(t.z)}, {"p", pval(t.p)}, {"n", t.n}};
}

void to_json(json& j, const FixedEffect& f) {
    j = json{{"estimate", r6(f.estimate)}, {"se", r6(f.se)}, {"z", r6(f.z)}, {"p", pval(f.p)}};
}

void to_json(json& j, const LmmFit& f) {
    j = json{{"intercept", f.intercept},
             {"slope", f.slope},
             {"sd_intercept", r6(f.sd_intercept)},
             {"sd_slope", r6(f.sd_slope)},
             {"corr", r6(f.corr)},
             {"sd_residual", r6(f.sd_residual)},
             {"reml_loglik", r6(f.reml_loglik)},
             {"theta", {r6(f.theta[0]), r6(f.theta[1]), r6(f.theta[2])}},
             {"converged", f.converged},
             {"iterations", f.iterations},
             {"restarts_run", f.restarts_run},
             {"restart_spread", r6(f.restart_spread)},
             {"n_participants", f.n_participants},
             {"n_obs", f.n_obs},
             {"message", f.message}};
}

void to_json(json& j, const ItsReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"k", p.k}, {"observed_mean", r6(p.observed_mean)}, {"n", p.n},
                       {"fitted", r6(p.fitted)}, {"counterfactual", p.k > 0 ? r6(p.counterfactual) : json(nullptr)}});
    }
    j = json{{"intercept", r6(r.intercept)},
             {"pre_slope", r6(r.pre_slope)},
             {"post_slope", r6(r.post_slope)},
             {"slope_change", r6(r.slope_change)},
             {"slope_change_p", pval(r.slope_change_p)},
             {"level_change", r6(r.level_change)},
             {"level_change_se", r6(r.level_change_se)},
             {"level_change_t", r6(r.level_change_t)},
             {"level_change_p", pval(r.level_change_p)},
             {"residual_sd", r6(r.residual_sd)},
             {"n_participants", r.n_participants},
             {"n_points", r.n_points},
             {"window", r.window},
             {"excluded", r.excluded},
             {"points", pts}};
}

void to_json(json& j, const RankTestResult& r) {
    j = json{{"statistic", r6(r.statistic)}, {"p", pval(r.p)}, {"z", r6(r.z)}, {"exact", r.exact}, {"n", r.n}};
}

void to_json(json& j, const ShapiroWilkResult& r) {
    j = json{{"w", r6(r.w)}, {"p", pval(r.p)}, {"n", r.n}};
}

void to_json(json& j, const RetentionCurve& r) {
    j = json{{"n", r.n}, {"step_days", r.step_days}, {"day30", r6(r.at(30))}};
    json s = json::array();
    for (double v : r.survival) s.push_back(r6(v));
    j["survival"] = s;
}

void to_json(json& j, const BootstrapBand& b) {
    auto arr = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(r6(x));
        return a;
    };
    j = json{{"estimate", arr(b.estimate)}, {"lower", arr(b.lower)}, {"upper", arr(b.upper)},
             {"lower_pct", b.lower_pct}, {"upper_pct", b.upper_pct}, {"resamples", b.resamples}, {"failed", b.failed}};
}

}  // namespace moods::stats
