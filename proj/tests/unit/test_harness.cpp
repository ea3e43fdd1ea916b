#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <sstream>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/harness/harness.hpp"
#include "classbot/store/csv.hpp"
#include "support.hpp"

#include <sys/wait.h>

using namespace classbot;
using namespace classbot::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = CLASSBOT_SCENARIO_DIR;

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("bundled scenarios match their goldens") {
    const auto report = run_scenario_suite(kScenarios);
    REQUIRE(report.results.size() >= 4);
    for (const auto& r : report.results) {
        CHECK_MESSAGE(r.passed, r.name << ": " << r.error << (r.diffs.empty() ? "" : r.diffs.front()));
    }
    CHECK(report.passed());
    CHECK(report.table().find("scenarios passed") != std::string::npos);
}

TEST_CASE("a wrong golden fails with a pointer to the difference") {
    testing::TempDir dir;
    fs::copy_file(kScenarios / "attendance.jsonl", dir / "attendance.jsonl");
    auto golden = json::parse(store::read_file(kScenarios / "attendance.expected.json"));
    golden["attendance"][0]["present_count"] = 5;
    store::write_file_atomic(dir / "attendance.expected.json", golden.dump());
    const auto report = run_scenario_suite(dir.path);
    REQUIRE(report.results.size() == 1);
    CHECK_FALSE(report.passed());
    REQUIRE(report.results[0].diffs.size() == 1);
    CHECK(report.results[0].diffs[0].rfind("/attendance/0/present_count", 0) == 0);
    CHECK(report.table().find("FAIL") != std::string::npos);
}

TEST_CASE("a corrupted scenario names its line") {
    testing::TempDir dir;
    auto lines = lines_of(store::read_file(kScenarios / "simple_survey.jsonl"));
    REQUIRE(lines.size() > 4);
    lines[3] = "{\"type\":\"step\",\"at_ms\":";
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    store::write_file_atomic(dir / "simple_survey.jsonl", text);
    fs::copy_file(kScenarios / "simple_survey.expected.json", dir / "simple_survey.expected.json");
    const auto report = run_scenario_suite(dir.path);
    REQUIRE(report.results.size() == 1);
    CHECK_FALSE(report.passed());
    CHECK(report.results[0].error.find(":4:") != std::string::npos);
    CHECK_THROWS_AS(gateway::load_scenario((dir / "simple_survey.jsonl").string()), Error);
}

TEST_CASE("missing goldens and directories") {
    testing::TempDir dir;
    fs::copy_file(kScenarios / "feedback.jsonl", dir / "feedback.jsonl");
    const auto report = run_scenario_suite(dir.path);
    CHECK_FALSE(report.passed());
    CHECK(report.results.at(0).error.find("missing golden") != std::string::npos);
    CHECK_THROWS_AS(run_scenario_suite(dir / "absent"), Error);
}

TEST_CASE("a suite of ten reports every row and fails on one bad golden") {
    testing::TempDir dir;
    const std::vector<std::string> names{"attendance", "simple_survey", "complex_survey", "feedback"};
    for (int i = 0; i < 10; ++i) {
        const auto& base = names[static_cast<std::size_t>(i) % names.size()];
        const std::string name = "case" + std::to_string(i);
        fs::copy_file(kScenarios / (base + ".jsonl"), dir / (name + ".jsonl"));
        auto golden = json::parse(store::read_file(kScenarios / (base + ".expected.json")));
        if (i == 6) golden["audit_counts"]["survey.response"] = 1000;
        store::write_file_atomic(dir / (name + ".expected.json"), golden.dump());
    }
    const auto report = run_scenario_suite(dir.path);
    REQUIRE(report.results.size() == 10);
    CHECK_FALSE(report.passed());
    for (const auto& r : report.results) CHECK(r.passed == (r.name != "case6"));
    const auto table = lines_of(report.table());
    CHECK(table.size() == 12);
    CHECK(table.back() == "9/10 scenarios passed");

    const std::string cli = CLASSBOT_SIMHARNESS;
    CHECK(WEXITSTATUS(std::system((cli + " suite " + kScenarios.string() + " > /dev/null").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system((cli + " suite " + dir.path.string() + " > /dev/null").c_str())) == 1);
    CHECK(WEXITSTATUS(std::system((cli + " suite " + (dir / "absent").string() + " 2> /dev/null").c_str())) == 2);
    CHECK(WEXITSTATUS(std::system((cli + " load --instructors 0 2> /dev/null").c_str())) == 2);
}

TEST_CASE("subset comparison") {
    const json actual{{"a", 1}, {"b", {{"c", {1, 2}}, {"d", "x"}}}};
    CHECK(subset_diff(json{{"b", {{"d", "x"}}}}, actual).empty());
    CHECK(subset_diff(json{{"b", {{"c", {1, 2, 3}}}}}, actual).size() == 1);
    CHECK(subset_diff(json{{"z", 1}}, actual) == std::vector<std::string>{"/z: missing"});
    CHECK(subset_diff(json{{"a", 2}}, actual).at(0).rfind("/a:", 0) == 0);
}

TEST_CASE("replays are byte-identical") {
    for (const char* name : {"attendance", "simple_survey", "complex_survey", "feedback"}) {
        const auto scenario = gateway::load_scenario((kScenarios / (std::string(name) + ".jsonl")).string());
        const auto a = replay_scenario(scenario);
        const auto b = replay_scenario(scenario);
        CHECK(!a.event_stream.empty());
        CHECK(a.event_stream == b.event_stream);
        CHECK(a.registry.dump() == b.registry.dump());
        CHECK(a.state.dump() == b.state.dump());
    }
}

TEST_CASE("replay exports closed sessions when asked") {
    testing::TempDir dir;
    const auto scenario = gateway::load_scenario((kScenarios / "attendance.jsonl").string());
    replay_scenario(scenario, dir.path);
    const auto rows = store::parse_csv(store::read_file(dir / "data/attendance/b1-att-1.csv"));
    CHECK(rows.size() == 5);
}

TEST_CASE("load profile validation") {
    LoadProfile p;
    CHECK_NOTHROW(p.validate());
    p.instructors = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = LoadProfile{};
    p.threshold_ms = -1;
    CHECK_THROWS_AS(p.validate(), Error);
    p = LoadProfile{};
    p.server_url = "ftp://x";
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("smallest load run") {
    LoadProfile p;
    p.instructors = 1;
    p.students_per_group = 1;
    p.duration_s = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = run_load(p);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
    // one lecture round plus creating, starting and stopping the bot
    CHECK(a.requests == 17 + 3);
    CHECK(a.unexpected_errors() == 0);
    CHECK(a.passed());
    const auto b = run_load(p);
    CHECK(b.requests == a.requests);
    CHECK(b.error_counts == a.error_counts);
    CHECK(a.to_json().at("requests") == a.requests);
}

TEST_CASE("load against an unreachable server") {
    LoadProfile p;
    p.instructors = 1;
    p.students_per_group = 1;
    p.server_url = "http://127.0.0.1:1";
    p.api_keys = {"cb_x_y"};
    try {
        run_load(p);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unavailable);
    }
}

}
