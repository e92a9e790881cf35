#include "moods/storage.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <zlib.h>

namespace moods::storage {

namespace fs = std::filesystem;

namespace {

std::uint32_t crc_of(std::string_view s) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename Map, typename Key, typename T>
bool upsert(Map& m, const Key& key, const json& body) {
    auto it = m.find(key);
    if (it != m.end() && json(it->second) == body) return false;
    T value = body.get<T>();
    if (it == m.end()) m.emplace(key, std::move(value));
    else it->second = std::move(value);
    return true;
}

template <typename Map>
json values_of(const Map& m) {
    json a = json::array();
    for (const auto& [k, v] : m) a.push_back(v);
    return a;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& p, const std::string& content) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Validation, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::Validation, "short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

}  // namespace

void to_json(json& j, const ParticipantRecord& r) {
    j = json{{"participant_id", r.participant_id}, {"enrollment_day", r.enrollment_day}, {"tz_offset_min", r.tz_offset_min}};
}

void from_json(const json& j, ParticipantRecord& r) {
    j.at("participant_id").get_to(r.participant_id);
    j.at("enrollment_day").get_to(r.enrollment_day);
    r.tz_offset_min = j.value("tz_offset_min", 0);
}

LogFile log_for_kind(std::string_view kind) {
    if (kind == "participant" || kind == "event" || kind == "ticket") return LogFile::Events;
    if (kind == "annotation" || kind == "task" || kind == "lexicon") return LogFile::Annotations;
    if (kind == "survey_instance" || kind == "survey") return LogFile::Surveys;
    throw Error(ErrorCode::Validation, "unknown record kind '" + std::string(kind) + "'");
}

std::string encode_line(const LogRecord& r) {
    const std::string payload =
        json{{"seq", r.seq}, {"kind", r.kind}, {"id", r.id}, {"ver", r.ver}, {"body", r.body}}.dump();
    char crc[9];
    std::snprintf(crc, sizeof crc, "%08x", crc_of(payload));
    std::string line;
    line.reserve(payload.size() + 10);
    line.append(crc, 8).append(1, ' ').append(payload).append(1, '\n');
    return line;
}

std::optional<LogRecord> decode_line(std::string_view line) {
    if (line.size() < 10 || line[8] != ' ') return std::nullopt;
    std::uint32_t want = 0;
    for (int i = 0; i < 8; ++i) {
        const char c = line[static_cast<std::size_t>(i)];
        std::uint32_t v;
        if (c >= '0' && c <= '9') v = static_cast<std::uint32_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v = static_cast<std::uint32_t>(c - 'a' + 10);
        else return std::nullopt;
        want = (want << 4) | v;
    }
    const std::string_view payload = line.substr(9);
    if (crc_of(payload) != want) return std::nullopt;
    try {
        const json j = json::parse(payload);
        LogRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.kind = j.at("kind").get<std::string>();
        r.id = j.at("id").get<std::string>();
        r.ver = j.at("ver").get<std::uint64_t>();
        r.body = j.at("body");
        log_for_kind(r.kind);
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

bool ParticipantState::apply(const LogRecord& r) {
    last_seq = std::max(last_seq, r.seq);
    const auto& k = r.kind;
    if (k == "participant") {
        if (participant && json(*participant) == r.body) return false;
        participant = r.body.get<ParticipantRecord>();
        return true;
    }
    if (k == "event") return upsert<decltype(events), EventId, PhysiologicalEvent>(events, r.id, r.body);
    if (k == "ticket") return upsert<decltype(tickets), EventId, events::PromptTicket>(tickets, r.id, r.body);
    if (k == "annotation") return upsert<decltype(annotations), EventId, StressAnnotation>(annotations, r.id, r.body);
    if (k == "task") return upsert<decltype(tasks), EventId, annotations::StressorTask>(tasks, r.id, r.body);
    if (k == "lexicon") return upsert<decltype(lexicon), std::string, annotations::LexiconEntry>(lexicon, r.id, r.body);
    if (k == "survey_instance") {
        return upsert<decltype(survey_instances), int, surveys::SurveyInstance>(survey_instances, std::stoi(r.id), r.body);
    }
    if (k == "survey") return upsert<decltype(surveys), int, WeeklySurvey>(surveys, std::stoi(r.id), r.body);
    throw Error(ErrorCode::Validation, "unknown record kind '" + k + "'");
}

void to_json(json& j, const ParticipantState& s) {
    j = json{{"participant", s.participant ? json(*s.participant) : json(nullptr)},
             {"events", values_of(s.events)},
             {"tickets", values_of(s.tickets)},
             {"annotations", values_of(s.annotations)},
             {"tasks", values_of(s.tasks)},
             {"lexicon", values_of(s.lexicon)},
             {"survey_instances", values_of(s.survey_instances)},
             {"surveys", values_of(s.surveys)},
             {"last_seq", s.last_seq}};
}

void from_json(const json& j, ParticipantState& s) {
    s = ParticipantState{};
    if (!j.at("participant").is_null()) s.participant = j.at("participant").get<ParticipantRecord>();
    for (const auto& e : j.at("events")) {
        auto v = e.get<PhysiologicalEvent>();
        s.events.emplace(v.event_id, std::move(v));
    }
    for (const auto& e : j.at("tickets")) {
        auto v = e.get<events::PromptTicket>();
        s.tickets.emplace(v.event_id, std::move(v));
    }
    for (const auto& e : j.at("annotations")) {
        auto v = e.get<StressAnnotation>();
        s.annotations.emplace(v.event_id, std::move(v));
    }
    for (const auto& e : j.at("tasks")) {
        auto v = e.get<annotations::StressorTask>();
        s.tasks.emplace(v.event_id, std::move(v));
    }
    for (const auto& e : j.at("lexicon")) {
        auto v = e.get<annotations::LexiconEntry>();
        s.lexicon.emplace(v.text, std::move(v));
    }
    for (const auto& e : j.at("survey_instances")) {
        auto v = e.get<surveys::SurveyInstance>();
        s.survey_instances.emplace(v.week_index, std::move(v));
    }
    for (const auto& e : j.at("surveys")) {
        auto v = e.get<WeeklySurvey>();
        s.surveys.emplace(v.week_index, std::move(v));
    }
    s.last_seq = j.at("last_seq").get<std::uint64_t>();
}

std::uint64_t ParticipantState::hash() const {
    json j = *this;
    j.erase("last_seq");
    return fnv1a64(j.dump());
}

ParticipantStore::ParticipantStore(fs::path dir, ParticipantId participant, StoreOptions options)
    : dir_(std::move(dir)), participant_(std::move(participant)), options_(options) {
    fs::create_directories(dir_);
    load();
}

void ParticipantStore::load() {
    std::array<std::string, 3> logs;
    for (std::size_t i = 0; i < 3; ++i) logs[i] = read_all(dir_ / kLogNames[i]);

    std::array<std::uint64_t, 3> start{};
    const fs::path snap = dir_ / "snapshot.json";
    if (options_.use_snapshot && fs::exists(snap)) {
        try {
            const json j = json::parse(read_all(snap));
            if (j.at("schema").get<std::string>() != kSnapshotSchema) throw std::runtime_error("schema");
            const auto horizons = j.at("horizons").get<std::array<std::uint64_t, 3>>();
            const auto crcs = j.at("prefix_crc").get<std::array<std::uint32_t, 3>>();
            // the logs must still hold exactly the bytes the snapshot covered
            bool fits = true;
            for (std::size_t i = 0; i < 3; ++i) {
                if (horizons[i] > logs[i].size() || crc_of(std::string_view(logs[i]).substr(0, horizons[i])) != crcs[i]) {
                    fits = false;
                }
            }
            ParticipantState s = j.at("state").get<ParticipantState>();
            if (fits && s.hash() == j.at("hash").get<std::uint64_t>()) {
                state_ = std::move(s);
                start = horizons;
                report_.from_snapshot = true;
            }
        } catch (const std::exception&) {
            // unusable snapshot: fall back to a full replay
        }
        if (!report_.from_snapshot && options_.repair_torn_tail) fs::remove(snap);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const fs::path p = dir_ / kLogNames[i];
        const std::string& data = logs[i];
        std::size_t pos = std::min<std::size_t>(start[i], data.size());
        std::size_t good = pos;
        while (pos < data.size()) {
            const std::size_t nl = data.find('\n', pos);
            if (nl == std::string::npos) break;
            auto rec = decode_line(std::string_view(data).substr(pos, nl - pos));
            if (!rec || log_for_kind(rec->kind) != static_cast<LogFile>(i)) break;
            ++report_.records;
            if (!state_.apply(*rec)) ++report_.duplicates;
            pos = nl + 1;
            good = pos;
        }
        report_.dropped_bytes += data.size() - good;
        if (good < data.size() && options_.repair_torn_tail) fs::resize_file(p, good);
        sizes_[i] = good < data.size() && !options_.repair_torn_tail ? data.size() : good;
    }
}

std::shared_ptr<const ParticipantState> ParticipantStore::state() const {
    std::lock_guard lock(mu_);
    if (!published_) published_ = std::make_shared<const ParticipantState>(state_);
    return published_;
}

bool ParticipantStore::append(std::string_view kind, std::string_view id, std::uint64_t ver, const json& body) {
    const auto file = static_cast<std::size_t>(log_for_kind(kind));
    std::lock_guard lock(mu_);
    LogRecord rec{state_.last_seq + 1, std::string(kind), std::string(id), ver, body};
    const std::uint64_t before = state_.last_seq;
    if (!state_.apply(rec)) {
        state_.last_seq = before;
        return false;
    }
    const std::string line = encode_line(rec);
    if (!out_[file]) {
        out_[file] = std::make_unique<std::ofstream>(dir_ / kLogNames[file], std::ios::binary | std::ios::app);
        if (!*out_[file]) throw Error(ErrorCode::Validation, "cannot open log in " + dir_.string());
    }
    auto& out = *out_[file];
    out << line;
    if (options_.flush_each_append) out.flush();
    if (!out) throw Error(ErrorCode::Validation, "log write failed in " + dir_.string());
    sizes_[file] += line.size();
    published_.reset();
    return true;
}

bool ParticipantStore::put_participant(const ParticipantRecord& r) { return append("participant", r.participant_id, 1, r); }
bool ParticipantStore::put_event(const PhysiologicalEvent& e) { return append("event", e.event_id, 1, e); }
bool ParticipantStore::put_ticket(const events::PromptTicket& t) { return append("ticket", t.event_id, t.revision, t); }
bool ParticipantStore::put_annotation(const StressAnnotation& a) { return append("annotation", a.event_id, a.revision, a); }
bool ParticipantStore::put_task(const annotations::StressorTask& t) { return append("task", t.event_id, t.closed ? 2 : 1, t); }
bool ParticipantStore::put_lexicon(const annotations::LexiconEntry& e) { return append("lexicon", e.text, e.use_count, e); }
bool ParticipantStore::put_survey_instance(const surveys::SurveyInstance& s) {
    return append("survey_instance", std::to_string(s.week_index), s.submitted ? 2 : 1, s);
}
bool ParticipantStore::put_survey(const WeeklySurvey& s) { return append("survey", std::to_string(s.week_index), 1, s); }

void ParticipantStore::write_snapshot() {
    std::lock_guard lock(mu_);
    for (auto& o : out_) {
        if (o) o->flush();
    }
    std::array<std::uint32_t, 3> crcs{};
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string data = read_all(dir_ / kLogNames[i]);
        crcs[i] = crc_of(std::string_view(data).substr(0, std::min<std::size_t>(sizes_[i], data.size())));
    }
    json j{{"schema", kSnapshotSchema}, {"participant_id", participant_}, {"horizons", sizes_},
           {"prefix_crc", crcs}, {"hash", state_.hash()}, {"state", state_}};
    write_atomic(dir_ / "snapshot.json", j.dump());
}

void ParticipantStore::compact() {
    {
        std::lock_guard lock(mu_);
        for (auto& o : out_) o.reset();
        std::array<std::string, 3> content;
        std::uint64_t seq = 0;
        auto emit = [&](const char* kind, const std::string& id, std::uint64_t ver, const json& body) {
            LogRecord r{++seq, kind, id, ver, body};
            content[static_cast<std::size_t>(log_for_kind(kind))] += encode_line(r);
        };
        if (state_.participant) emit("participant", state_.participant->participant_id, 1, *state_.participant);
        for (const auto& [id, e] : state_.events) emit("event", id, 1, e);
        for (const auto& [id, t] : state_.tickets) emit("ticket", id, t.revision, t);
        for (const auto& [id, a] : state_.annotations) emit("annotation", id, a.revision, a);
        for (const auto& [id, t] : state_.tasks) emit("task", id, t.closed ? 2 : 1, t);
        for (const auto& [id, e] : state_.lexicon) emit("lexicon", id, e.use_count, e);
        for (const auto& [w, s] : state_.survey_instances) emit("survey_instance", std::to_string(w), s.submitted ? 2 : 1, s);
        for (const auto& [w, s] : state_.surveys) emit("survey", std::to_string(w), 1, s);
        // A stale snapshot must not point past the rewritten logs.
        fs::remove(dir_ / "snapshot.json");
        for (std::size_t i = 0; i < 3; ++i) {
            write_atomic(dir_ / kLogNames[i], content[i]);
            sizes_[i] = content[i].size();
        }
        state_.last_seq = seq;
        published_.reset();
    }
    write_snapshot();
}

std::uint64_t ParticipantStore::log_bytes() const {
    std::lock_guard lock(mu_);
    return sizes_[0] + sizes_[1] + sizes_[2];
}

bool valid_participant_id(std::string_view id) noexcept {
    if (id.empty() || id.size() > 64 || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
               c == '.';
    });
}

Store::Store(fs::path data_dir, StoreOptions options) : dir_(std::move(data_dir)), options_(options) {
    fs::create_directories(dir_);
}

std::vector<ParticipantId> Store::participants() const {
    std::set<ParticipantId> ids;
    {
        std::lock_guard lock(mu_);
        for (const auto& [pid, _] : open_) ids.insert(pid);
    }
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_directory()) continue;
        const auto name = entry.path().filename().string();
        if (!valid_participant_id(name)) continue;
        for (const char* log : kLogNames) {
            if (fs::exists(entry.path() / log)) {
                ids.insert(name);
                break;
            }
        }
    }
    return {ids.begin(), ids.end()};
}

ParticipantStore& Store::open(const ParticipantId& participant) {
    if (!valid_participant_id(participant)) {
        throw Error(ErrorCode::Validation, "participant id '" + participant + "' is not storable");
    }
    std::lock_guard lock(mu_);
    auto it = open_.find(participant);
    if (it == open_.end()) {
        it = open_.emplace(participant, std::make_unique<ParticipantStore>(dir_ / participant, participant, options_)).first;
    }
    return *it->second;
}

}  // namespace moods::storage
