#include <algorithm>
#include <cstdio>
#include <fstream>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/engine/engine.hpp"
#include "classbot/harness/harness.hpp"
#include "classbot/store/audit_log.hpp"
#include "classbot/store/csv.hpp"
#include "classbot/store/exporter.hpp"

namespace classbot::harness {

namespace fs = std::filesystem;

namespace {

std::string escape_pointer(const std::string& token) {
    std::string out;
    for (char c : token) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

}  // namespace

ScenarioOutcome replay_scenario(const gateway::SimScenario& scenario, const std::optional<fs::path>& export_dir) {
    scenario.validate();
    ManualClock clock(scenario.start);
    gateway::SimPlatform platform(scenario.guild, scenario.seed, clock);
    store::MemoryAuditSink audit;
    std::optional<store::CsvExporter> exporter;
    if (export_dir) {
        exporter.emplace(*export_dir);
    }
    engine::EngineOptions options;
    options.code_seed = scenario.seed;
    engine::InteractionEngine eng(scenario.bot_id, platform, clock, audit, exporter ? &*exporter : nullptr, options);
    engine::EngineContext ctx;
    ctx.guild_id = scenario.guild.guild_id;
    ctx.default_channels = scenario.guild.default_channels;
    ctx.admin_role_id = scenario.guild.admin_role_id;
    ctx.api_token_ref = token_ref_for(scenario.bot_id);
    eng.initialize(std::move(ctx), scenario.guild.groups);

    json commands = json::array();
    gateway::ScenarioHooks hooks;
    hooks.on_event = [&](const gateway::ChatEvent& ev) { eng.on_event(ev); };
    hooks.on_tick = [&](Timestamp now) { eng.tick(now); };
    hooks.on_command = [&](const json& j, Timestamp) {
        json entry{{"type", j.value("type", std::string{})}};
        try {
            const auto result = eng.execute(engine::command_from_json(j));
            entry["ok"] = result.ok();
            entry["message"] = result.message;
            entry["data"] = result.payload;
            if (!result.ok()) {
                entry["error"] = to_string(result.error);
            }
        } catch (const Error& e) {
            entry["ok"] = false;
            entry["error"] = to_string(e.kind());
            entry["message"] = e.what();
        }
        commands.push_back(std::move(entry));
    };

    ScenarioOutcome out;
    out.run = gateway::run_scenario(scenario, platform, clock, hooks);
    out.event_stream = out.run.event_stream;

    json attendance = json::array();
    for (const auto& s : eng.attendance_sessions()) {
        json a = s.to_json();
        a.erase("csv_path");
        json present = json::array();
        for (const auto& c : eng.attendance_session(s.session_id).checkins) {
            present.push_back(c.student_id);
        }
        a["present"] = std::move(present);
        attendance.push_back(std::move(a));
    }
    json surveys = json::array();
    for (const auto& s : eng.survey_list()) {
        surveys.push_back(eng.survey_results(s.at("survey_id").get<std::string>()));
    }
    json feedback = json::array();
    const json snapshot = eng.snapshot();
    for (const auto& f : snapshot.at("feedback")) {
        feedback.push_back(eng.feedback_results(f.at("session").at("id").get<std::string>()));
    }
    std::map<std::string, std::uint64_t> audit_counts;
    for (const auto& ev : audit.events()) {
        ++audit_counts[ev.action];
    }
    out.state = {{"commands", std::move(commands)},
                 {"attendance", std::move(attendance)},
                 {"surveys", std::move(surveys)},
                 {"feedback", std::move(feedback)},
                 {"audit_counts", audit_counts},
                 {"report", out.run.report.to_json()}};

    BotInstance instance;
    instance.id = scenario.bot_id;
    instance.name = "scenario";
    instance.token_ref = token_ref_for(scenario.bot_id);
    instance.guild_id = scenario.guild.guild_id;
    instance.state = BotState::running;
    instance.created_at = scenario.start;
    out.registry = {{"version", 1},
                    {"next_bot_index", 2},
                    {"bots",
                     json::array({{{"instance", instance},
                                   {"guild", gateway::guild_to_json(scenario.guild)},
                                   {"seed", scenario.seed},
                                   {"engine", snapshot}}})}};
    return out;
}

std::vector<std::string> subset_diff(const json& expected, const json& actual, const std::string& path) {
    std::vector<std::string> diffs;
    const std::string where = path.empty() ? "/" : path;
    if (expected.is_object()) {
        if (!actual.is_object()) {
            diffs.push_back(where + ": expected an object, got " + actual.dump());
            return diffs;
        }
        for (const auto& [k, v] : expected.items()) {
            const std::string child = path + "/" + escape_pointer(k);
            if (!actual.contains(k)) {
                diffs.push_back(child + ": missing");
                continue;
            }
            auto sub = subset_diff(v, actual.at(k), child);
            diffs.insert(diffs.end(), sub.begin(), sub.end());
        }
        return diffs;
    }
    if (expected.is_array()) {
        if (!actual.is_array() || actual.size() != expected.size()) {
            diffs.push_back(where + ": expected " + expected.dump() + ", got " + actual.dump());
            return diffs;
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            auto sub = subset_diff(expected[i], actual[i], path + "/" + std::to_string(i));
            diffs.insert(diffs.end(), sub.begin(), sub.end());
        }
        return diffs;
    }
    if (expected != actual) {
        diffs.push_back(where + ": expected " + expected.dump() + ", got " + actual.dump());
    }
    return diffs;
}

bool SuiteReport::passed() const {
    return std::all_of(results.begin(), results.end(), [](const ScenarioResult& r) { return r.passed; });
}

json SuiteReport::to_json() const {
    json rows = json::array();
    for (const auto& r : results) {
        rows.push_back({{"name", r.name}, {"passed", r.passed}, {"error", r.error}, {"diffs", r.diffs}});
    }
    return {{"passed", passed()}, {"scenarios", std::move(rows)}};
}

std::string SuiteReport::table() const {
    std::size_t width = 8;
    for (const auto& r : results) {
        width = std::max(width, r.name.size());
    }
    std::string out;
    char line[512];
    std::snprintf(line, sizeof line, "%-*s  %-6s  %s\n", static_cast<int>(width), "scenario", "result", "details");
    out += line;
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::string details = r.error;
        if (details.empty() && !r.diffs.empty()) {
            details = std::to_string(r.diffs.size()) + " diff(s), first: " + r.diffs.front();
        }
        failed += r.passed ? 0 : 1;
        std::snprintf(line, sizeof line, "%-*s  %-6s  %s\n", static_cast<int>(width), r.name.c_str(),
                      r.passed ? "PASS" : "FAIL", details.c_str());
        out += line;
    }
    out += std::to_string(results.size() - failed) + "/" + std::to_string(results.size()) + " scenarios passed\n";
    return out;
}

SuiteReport run_scenario_suite(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw Error(ErrorKind::invalid_input, "scenario directory " + dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    SuiteReport report;
    for (const auto& file : files) {
        ScenarioResult r;
        r.name = file.stem().string();
        try {
            const auto scenario = gateway::load_scenario(file.string());
            const fs::path golden = file.parent_path() / (r.name + ".expected.json");
            if (!fs::exists(golden)) {
                throw Error(ErrorKind::invalid_input, "missing golden " + golden.filename().string());
            }
            json expected;
            try {
                expected = json::parse(store::read_file(golden));
            } catch (const json::exception& e) {
                throw Error(ErrorKind::invalid_input, golden.filename().string() + ": " + e.what());
            }
            const auto outcome = replay_scenario(scenario);
            r.diffs = subset_diff(expected, outcome.state);
            r.passed = r.diffs.empty();
        } catch (const std::exception& e) {
            r.error = e.what();
            r.passed = false;
        }
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace classbot::harness
