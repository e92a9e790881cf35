#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "moods/json_io.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(MOODS_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const fs::path& simulated() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "moods_cli_sim";
        fs::remove_all(d);
        REQUIRE(run("simulate --out " + d.string()) == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("cli rejects unknown subcommands and bad options") {
    CHECK(run("frobnicate") != 0);
    CHECK(run("") != 0);
    CHECK(run("analyze nonsense") != 0);
    CHECK(run("viz build --participant P001") != 0);
    CHECK(run("--help") == 0);
}

TEST_CASE("cli viz build writes the week 14 bundle") {
    const auto out = fs::temp_directory_path() / "moods_cli_viz";
    fs::remove_all(out);
    REQUIRE(run("viz build --participant P001 --week 14 --in " + simulated().string() + " --out " + out.string()) == 0);
    std::size_t charts = 0;
    bool manifest = false;
    for (const auto& f : fs::directory_iterator(out)) {
        if (f.path().filename() == "manifest.json") manifest = true;
        else charts += f.path().extension() == ".json";
    }
    CHECK(manifest);
    CHECK(charts == 16);
    CHECK(run("viz build --participant NOBODY --week 1 --in " + simulated().string() + " --out " + out.string()) != 0);
    fs::remove_all(out);
}

TEST_CASE("cli analyze trends reports a significant decline") {
    const auto report = fs::temp_directory_path() / "moods_cli_trends.json";
    REQUIRE(run("analyze trends --metric intensity --bootstrap 0 --in " + simulated().string() + " --out " + report.string()) == 0);
    std::ifstream in(report);
    const auto j = moods::json::parse(in);
    const auto& t = j["intensity"]["all_weeks"]["trend"];
    CHECK(t["m"].get<double>() < 0);
    CHECK(t["p"].get<double>() < 0.05);
    fs::remove(report);
}
