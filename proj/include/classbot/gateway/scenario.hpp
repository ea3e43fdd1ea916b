#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "classbot/core/time.hpp"
#include "classbot/gateway/chat.hpp"
#include "classbot/gateway/guild.hpp"
#include "classbot/gateway/sim_platform.hpp"

namespace classbot::gateway {

enum class Behavior { dm_text, click_button, go_offline, go_online, command };

struct ScriptStep {
    std::int64_t at_ms = 0;
    MemberId member;
    Behavior behavior = Behavior::dm_text;
    std::string text;
    std::string button_id;
    ClickTarget target;
    /// Instructor command for Behavior::command, in the engine's JSON form.
    nlohmann::json command;
    /// 1-based source line, 0 when built in code.
    int line = 0;
};

/// A reproducible classroom: guild layout, seed and a time-ordered script.
struct SimScenario {
    std::uint64_t seed = 0;
    std::string bot_id = "b1";
    Timestamp start = parse_iso8601("2025-01-06T08:00:00.000Z");
    GuildSpec guild;
    std::vector<ScriptStep> script;

    /// Throws Error{invalid_input} naming the offending entry.
    void validate() const;
};

/// Reads the JSON Lines scenario format (see docs/formats.md). Errors carry
/// "<source>:<line>: ..." in their message.
SimScenario parse_scenario(std::istream& in, const std::string& source = "scenario");
SimScenario load_scenario(const std::string& path);
std::string scenario_to_jsonl(const SimScenario& scenario);

nlohmann::json step_to_json(const ScriptStep& step);
ScriptStep step_from_json(const nlohmann::json& j, int line = 0);

struct LatencySummary {
    std::uint64_t count = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    double max_ms = 0;

    bool operator==(const LatencySummary&) const = default;
};

struct SimReport {
    std::uint64_t events_emitted = 0;
    std::uint64_t actions_received = 0;
    std::uint64_t commands_run = 0;
    std::uint64_t unresolved_steps = 0;
    LatencySummary ack_latency;

    nlohmann::json to_json() const;
    bool operator==(const SimReport&) const = default;
};

/// How a scenario run reaches the engine under test.
struct ScenarioHooks {
    std::function<void(const ChatEvent&)> on_event;
    std::function<void(const nlohmann::json& command, Timestamp at)> on_command;
    std::function<void(Timestamp now)> on_tick;
};

struct ScenarioRun {
    SimReport report;
    std::vector<ChatEvent> events;
    /// Delivered events, one JSON object per line.
    std::string event_stream;
};

/// Plays the script against `platform` in virtual time: before each step the
/// clock moves to start + at_ms and the tick hook fires; events are then
/// drained from the platform queue and handed to on_event in order.
ScenarioRun run_scenario(const SimScenario& scenario, SimPlatform& platform, ManualClock& clock,
                         const ScenarioHooks& hooks);

}  // namespace classbot::gateway
