#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "classbot/gateway/scenario.hpp"

namespace classbot::harness {

// ---------------------------------------------------------------------------
// Scenario replay

/// Everything a single deterministic scenario run produces.
struct ScenarioOutcome {
    /// Final state compared against goldens: attendance summaries, survey
    /// and feedback results, command results, audit action counts and the
    /// simulation report.
    nlohmann::json state;
    /// One JSON line per platform event, in emission order.
    std::string event_stream;
    /// Same document layout as the server's registry.json.
    nlohmann::json registry;
    gateway::ScenarioRun run;
};

/// Replays a scenario against a fresh simulated platform and engine on a
/// manual clock. When export_dir is set, closed sessions are exported there.
ScenarioOutcome replay_scenario(const gateway::SimScenario& scenario,
                                const std::optional<std::filesystem::path>& export_dir = std::nullopt);

/// JSON-pointer paths where `actual` does not contain `expected`. Objects
/// match by subset; arrays and scalars must match exactly.
std::vector<std::string> subset_diff(const nlohmann::json& expected, const nlohmann::json& actual,
                                     const std::string& path = "");

struct ScenarioResult {
    std::string name;
    bool passed = false;
    std::string error;
    std::vector<std::string> diffs;
};

struct SuiteReport {
    std::vector<ScenarioResult> results;
    bool passed() const;
    nlohmann::json to_json() const;
    /// Fixed-width table, one row per scenario.
    std::string table() const;
};

/// Runs every *.jsonl in dir (sorted by name) and compares its final state
/// with the sibling <name>.expected.json. A scenario without a golden fails.
/// Throws Error{invalid_input} when dir does not exist.
SuiteReport run_scenario_suite(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Load

struct LoadProfile {
    int instructors = 12;
    int students_per_group = 50;
    std::uint64_t seed = 7;
    /// Each instructor runs ceil(duration_s / 10) lecture rounds, so counts
    /// depend only on the profile.
    int duration_s = 10;
    double threshold_ms = 300.0;
    /// Optional scenario file whose guild layout replaces the default
    /// classroom of students_per_group members.
    std::string scenario;
    std::string report_path;
    /// Empty: start an in-process server on loopback.
    std::string server_url;
    /// Keys for an external server, used round-robin by instructors.
    std::vector<std::string> api_keys;

    /// Throws Error{invalid_input} naming the bad field.
    void validate() const;
    nlohmann::json to_json() const;
};

struct LoadReport {
    LoadProfile profile;
    std::uint64_t requests = 0;
    /// "400", "429", "connect", "check:<what>", ... -> count
    std::map<std::string, std::uint64_t> error_counts;
    double p50_ms = 0;
    double p95_ms = 0;
    double max_ms = 0;
    double throughput_rps = 0;
    double wall_s = 0;

    std::uint64_t unexpected_errors() const;
    bool passed() const;
    nlohmann::json to_json() const;
};

/// Drives the full stack (HTTP -> engine -> simulated platform) with one
/// client thread per instructor. Throws Error{unavailable} when the server
/// cannot be reached at all.
LoadReport run_load(const LoadProfile& profile);

}  // namespace classbot::harness
