#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "../support/storage_fuzz.hpp"
#include "moods/storage.hpp"

using namespace moods;
using namespace moods::storage;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("moods_storage_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("line codec") {
    LogRecord r{7, "event", "e1", 1, json{{"a", 1}}};
    const auto line = encode_line(r);
    CHECK(line.back() == '\n');
    CHECK(line.size() > 9);
    CHECK(line[8] == ' ');
    const auto back = decode_line(std::string_view(line).substr(0, line.size() - 1));
    REQUIRE(back);
    CHECK(back->seq == 7);
    CHECK(back->kind == "event");
    CHECK(back->body == r.body);
    std::string bad = line.substr(0, line.size() - 1);
    bad[bad.size() - 2] ^= 1;
    CHECK_FALSE(decode_line(bad));
    CHECK_FALSE(decode_line("zzzz"));
}

TEST_CASE("log routing") {
    CHECK(log_for_kind("event") == LogFile::Events);
    CHECK(log_for_kind("ticket") == LogFile::Events);
    CHECK(log_for_kind("lexicon") == LogFile::Annotations);
    CHECK(log_for_kind("survey") == LogFile::Surveys);
    CHECK_THROWS_AS(log_for_kind("bogus"), Error);
}

TEST_CASE("repeated bodies are no-ops") {
    const auto dir = fresh_dir("noop");
    ParticipantStore s(dir, "P001");
    PhysiologicalEvent e{"e1", "P001", 100, 200, 50};
    CHECK(s.put_event(e));
    const auto bytes = s.log_bytes();
    CHECK_FALSE(s.put_event(e));
    CHECK(s.log_bytes() == bytes);
    e.score = 51;
    CHECK(s.put_event(e));
    CHECK(s.state()->events.at("e1").score == 51);
    fs::remove_all(dir);
}

TEST_CASE("reload reproduces the state hash") {
    const auto dir = fresh_dir("reload");
    std::mt19937_64 rng(4);
    std::uint64_t h = 0;
    {
        ParticipantStore s(dir, "P001");
        testing::write_random_history(s, 80, rng);
        h = s.state()->hash();
    }
    ParticipantStore again(dir, "P001");
    CHECK(again.state()->hash() == h);
    CHECK_FALSE(again.load_report().from_snapshot);
    CHECK(again.load_report().dropped_bytes == 0);
    fs::remove_all(dir);
}

TEST_CASE("snapshot shortens replay and compaction keeps the hash") {
    const auto dir = fresh_dir("snap");
    std::mt19937_64 rng(5);
    std::uint64_t h = 0, bytes = 0;
    {
        ParticipantStore s(dir, "P001");
        testing::write_random_history(s, 100, rng);
        s.write_snapshot();
        testing::write_random_history(s, 10, rng);
        h = s.state()->hash();
        bytes = s.log_bytes();
    }
    {
        ParticipantStore s(dir, "P001");
        CHECK(s.load_report().from_snapshot);
        CHECK(s.load_report().records == 10);
        CHECK(s.state()->hash() == h);
        s.compact();
        CHECK(s.log_bytes() <= bytes);
        CHECK(s.state()->hash() == h);
    }
    ParticipantStore s(dir, "P001");
    CHECK(s.state()->hash() == h);
    fs::remove_all(dir);
}

TEST_CASE("a corrupt snapshot falls back to full replay") {
    const auto dir = fresh_dir("badsnap");
    std::mt19937_64 rng(6);
    std::uint64_t h = 0;
    {
        ParticipantStore s(dir, "P001");
        testing::write_random_history(s, 30, rng);
        s.write_snapshot();
        h = s.state()->hash();
    }
    {
        std::ofstream(dir / "snapshot.json", std::ios::trunc) << "{not json";
    }
    ParticipantStore s(dir, "P001");
    CHECK_FALSE(s.load_report().from_snapshot);
    CHECK(s.state()->hash() == h);
    fs::remove_all(dir);
}

TEST_CASE("a snapshot past a crash cut stays dead after the logs regrow") {
    const auto dir = fresh_dir("stalesnap");
    std::uint64_t cut = 0;
    {
        ParticipantStore s(dir, "P001");
        s.put_event(PhysiologicalEvent{"e1", "P001", 100, 150, 1});
        cut = s.log_bytes();
        s.put_event(PhysiologicalEvent{"e2", "P001", 200, 250, 2});
        s.write_snapshot();
    }
    fs::resize_file(dir / "events.log", cut + 5);
    {
        ParticipantStore s(dir, "P001");
        CHECK_FALSE(s.load_report().from_snapshot);
        CHECK(s.state()->events.size() == 1);
        // longer than the lost record, so the old horizon fits again
        PhysiologicalEvent e3{"e3-with-a-much-longer-identifier", "P001", 300, 350, 3};
        e3.location = GeoPoint{40.0, -83.0};
        s.put_event(e3);
    }
    ParticipantStore s(dir, "P001");
    CHECK(s.state()->events.size() == 2);
    CHECK(s.state()->events.count("e3-with-a-much-longer-identifier"));
    CHECK(s.load_report().dropped_bytes == 0);
    fs::remove_all(dir);
}

TEST_CASE("a corrupt line stops replay there") {
    const auto dir = fresh_dir("corrupt");
    {
        ParticipantStore s(dir, "P001");
        for (int i = 1; i <= 3; ++i) s.put_event(PhysiologicalEvent{"e" + std::to_string(i), "P001", i * 100, i * 100 + 50, 1});
    }
    auto data = slurp(dir / "events.log");
    const auto second = data.find('\n') + 1;
    data[second + 20] ^= 0x5;  // inside record 2
    std::ofstream(dir / "events.log", std::ios::binary | std::ios::trunc) << data;
    ParticipantStore s(dir, "P001");
    CHECK(s.state()->events.size() == 1);
    CHECK(s.load_report().dropped_bytes == data.size() - second);
    CHECK(fs::file_size(dir / "events.log") == second);
    fs::remove_all(dir);
}

TEST_CASE("crash truncation always loads a prefix state") {
    const auto root = fresh_dir("trunc");
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const auto err = testing::truncation_trial(seed, root);
        CHECK_MESSAGE(err.empty(), "seed ", seed, ": ", err);
    }
    fs::remove_all(root);
}

TEST_CASE("store directory") {
    const auto dir = fresh_dir("store");
    Store st(dir);
    st.open("P002").put_participant({"P002", 19000, -300});
    st.open("P001");
    CHECK(st.participants() == std::vector<ParticipantId>{"P001", "P002"});
    CHECK_THROWS_AS(st.open("../evil"), Error);
    CHECK(valid_participant_id("P-01_a"));
    CHECK_FALSE(valid_participant_id(""));
    CHECK_FALSE(valid_participant_id("a/b"));
    fs::remove_all(dir);
}
