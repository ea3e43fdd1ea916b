#include "classbot/gateway/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "classbot/core/error.hpp"
#include "classbot/core/percentile.hpp"
#include "classbot/core/serialize.hpp"

namespace classbot::gateway {

namespace {

std::string_view behavior_name(Behavior b) {
    switch (b) {
        case Behavior::dm_text: return "dm_text";
        case Behavior::click_button: return "click_button";
        case Behavior::go_offline: return "go_offline";
        case Behavior::go_online: return "go_online";
        case Behavior::command: return "command";
    }
    return "dm_text";
}

Behavior parse_behavior(const std::string& name) {
    if (name == "dm_text") return Behavior::dm_text;
    if (name == "click_button") return Behavior::click_button;
    if (name == "go_offline") return Behavior::go_offline;
    if (name == "go_online") return Behavior::go_online;
    if (name == "command") return Behavior::command;
    throw Error(ErrorKind::invalid_input, "unknown behavior '" + name + "'");
}

std::string where(const ScriptStep& step, std::size_t index) {
    return step.line > 0 ? "line " + std::to_string(step.line) : "step " + std::to_string(index);
}

}  // namespace

void SimScenario::validate() const {
    guild.validate();
    std::set<MemberId> members;
    for (const auto& m : guild.members) {
        members.insert(m.id);
    }
    std::int64_t previous = 0;
    for (std::size_t i = 0; i < script.size(); ++i) {
        const ScriptStep& s = script[i];
        auto fail = [&](const std::string& msg) {
            throw Error(ErrorKind::invalid_input, where(s, i) + ": " + msg);
        };
        if (s.at_ms < 0) {
            fail("at_ms must be non-negative");
        }
        if (s.at_ms < previous) {
            fail("at_ms " + std::to_string(s.at_ms) + " goes backwards (previous " + std::to_string(previous) + ")");
        }
        previous = s.at_ms;
        if (s.behavior == Behavior::command) {
            if (!s.command.is_object() || !s.command.contains("type")) {
                fail("command step needs a command object with a type");
            }
            continue;
        }
        if (!members.contains(s.member)) {
            fail("unknown member '" + s.member + "'");
        }
        if (s.behavior == Behavior::click_button) {
            if (s.button_id.empty()) {
                fail("click_button needs a button");
            }
            if (!s.target.message_ref && !s.target.channel && !s.target.dm) {
                fail("click_button needs a target");
            }
        }
    }
}

nlohmann::json step_to_json(const ScriptStep& step) {
    nlohmann::json j{{"type", "step"}, {"at_ms", step.at_ms}, {"behavior", behavior_name(step.behavior)}};
    if (step.behavior == Behavior::command) {
        j["command"] = step.command;
        return j;
    }
    j["member"] = step.member;
    if (step.behavior == Behavior::dm_text) {
        j["text"] = step.text;
    }
    if (step.behavior == Behavior::click_button) {
        j["button"] = step.button_id;
        nlohmann::json target = nlohmann::json::object();
        if (step.target.message_ref) target["message_ref"] = *step.target.message_ref;
        if (step.target.channel) target["channel"] = *step.target.channel;
        if (step.target.dm) target["dm"] = true;
        j["target"] = std::move(target);
    }
    return j;
}

ScriptStep step_from_json(const nlohmann::json& j, int line) {
    ScriptStep s;
    s.line = line;
    s.at_ms = j.at("at_ms").get<std::int64_t>();
    s.behavior = parse_behavior(j.at("behavior").get<std::string>());
    if (s.behavior == Behavior::command) {
        s.command = j.at("command");
        return s;
    }
    s.member = j.at("member").get<std::string>();
    s.text = j.value("text", std::string{});
    s.button_id = j.value("button", std::string{});
    if (j.contains("target")) {
        const auto& t = j.at("target");
        if (t.contains("message_ref")) s.target.message_ref = t.at("message_ref").get<MessageRef>();
        if (t.contains("channel")) s.target.channel = t.at("channel").get<std::string>();
        s.target.dm = t.value("dm", false);
    }
    return s;
}

SimScenario parse_scenario(std::istream& in, const std::string& source) {
    SimScenario sc;
    bool have_header = false;
    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto fail = [&](const std::string& msg) {
            throw Error(ErrorKind::invalid_input, source + ":" + std::to_string(line) + ": " + msg);
        };
        try {
            const auto j = nlohmann::json::parse(text);
            const auto type = j.at("type").get<std::string>();
            if (type == "scenario") {
                if (have_header) {
                    fail("duplicate scenario header");
                }
                have_header = true;
                sc.seed = j.value("seed", std::uint64_t{0});
                sc.bot_id = j.value("bot_id", sc.bot_id);
                if (j.contains("start")) {
                    sc.start = parse_iso8601(j.at("start").get<std::string>());
                }
                nlohmann::json guild = j.value("guild", nlohmann::json::object());
                if (j.contains("latency_jitter_ms")) {
                    guild["latency_jitter_ms"] = j.at("latency_jitter_ms");
                }
                if (!guild.contains("members")) {
                    guild["members"] = nlohmann::json::array();
                }
                if (!guild.contains("groups")) {
                    guild["groups"] = nlohmann::json::array({{{"id", "g1"}, {"channel_id", "lecture"}}});
                }
                sc.guild = guild_from_json(guild);
            } else if (!have_header) {
                fail("first entry must be the scenario header");
            } else if (type == "member") {
                MemberInfo m{j.at("id").get<std::string>(), j.value("name", j.at("id").get<std::string>()),
                             j.value("online", true)};
                for (const auto& g : j.value("groups", std::vector<std::string>{})) {
                    auto it = std::find_if(sc.guild.groups.begin(), sc.guild.groups.end(),
                                           [&](const Group& grp) { return grp.id == g; });
                    if (it == sc.guild.groups.end()) {
                        fail("member " + m.id + " joins unknown group '" + g + "'");
                    }
                    it->roster.insert(m.id);
                }
                sc.guild.members.push_back(std::move(m));
            } else if (type == "step") {
                sc.script.push_back(step_from_json(j, line));
            } else {
                fail("unknown entry type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            fail(e.what());
        } catch (const Error& e) {
            const std::string prefix = source + ":";
            if (std::string_view(e.what()).substr(0, prefix.size()) == prefix) {
                throw;
            }
            fail(e.what());
        }
    }
    if (!have_header) {
        throw Error(ErrorKind::invalid_input, source + ": missing scenario header");
    }
    try {
        sc.validate();
    } catch (const Error& e) {
        // "line N: msg" becomes "source:N: msg"
        std::string msg = e.what();
        if (msg.rfind("line ", 0) == 0) {
            throw Error(ErrorKind::invalid_input, source + ":" + msg.substr(5));
        }
        throw Error(ErrorKind::invalid_input, source + ": " + msg);
    }
    return sc;
}

SimScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open scenario " + path);
    }
    return parse_scenario(in, path);
}

std::string scenario_to_jsonl(const SimScenario& sc) {
    nlohmann::json guild = guild_to_json(sc.guild);
    guild.erase("members");
    for (auto& g : guild["groups"]) {
        g.erase("roster");
    }
    std::ostringstream out;
    out << nlohmann::json{{"type", "scenario"},
                          {"seed", sc.seed},
                          {"bot_id", sc.bot_id},
                          {"start", format_iso8601(sc.start)},
                          {"guild", guild}}
               .dump()
        << '\n';
    for (const auto& m : sc.guild.members) {
        std::vector<std::string> groups;
        for (const auto& g : sc.guild.groups) {
            if (g.roster.contains(m.id)) {
                groups.push_back(g.id);
            }
        }
        out << nlohmann::json{{"type", "member"}, {"id", m.id}, {"name", m.display_name}, {"online", m.online},
                              {"groups", groups}}
                   .dump()
            << '\n';
    }
    for (const auto& s : sc.script) {
        out << step_to_json(s).dump() << '\n';
    }
    return out.str();
}

nlohmann::json SimReport::to_json() const {
    return {{"events_emitted", events_emitted},
            {"actions_received", actions_received},
            {"commands_run", commands_run},
            {"unresolved_steps", unresolved_steps},
            {"ack_latency",
             {{"count", ack_latency.count},
              {"p50_ms", ack_latency.p50_ms},
              {"p95_ms", ack_latency.p95_ms},
              {"max_ms", ack_latency.max_ms}}}};
}

ScenarioRun run_scenario(const SimScenario& scenario, SimPlatform& platform, ManualClock& clock,
                         const ScenarioHooks& hooks) {
    scenario.validate();
    ScenarioRun run;
    const std::size_t log_start = platform.action_log().size();

    auto drain = [&] {
        while (auto ev = platform.poll_event()) {
            run.events.push_back(*ev);
            run.event_stream += event_to_json(*ev).dump();
            run.event_stream += '\n';
            ++run.report.events_emitted;
            if (hooks.on_event) {
                hooks.on_event(*ev);
            }
        }
    };

    for (const auto& step : scenario.script) {
        clock.advance_to(scenario.start + Millis{step.at_ms});
        if (hooks.on_tick) {
            hooks.on_tick(clock.now());
        }
        drain();
        std::optional<ChatEvent> produced;
        switch (step.behavior) {
            case Behavior::command:
                ++run.report.commands_run;
                if (hooks.on_command) {
                    hooks.on_command(step.command, clock.now());
                }
                continue;
            case Behavior::dm_text: produced = platform.member_dm(step.member, step.text); break;
            case Behavior::click_button:
                produced = platform.member_click(step.member, step.target, step.button_id);
                break;
            case Behavior::go_offline: produced = platform.member_set_online(step.member, false); break;
            case Behavior::go_online: produced = platform.member_set_online(step.member, true); break;
        }
        if (!produced) {
            ++run.report.unresolved_steps;
        }
        drain();
    }
    if (hooks.on_tick) {
        hooks.on_tick(clock.now());
    }
    drain();

    const auto log = platform.action_log();
    std::vector<double> latencies;
    for (std::size_t i = log_start; i < log.size(); ++i) {
        latencies.push_back(static_cast<double>(log[i].latency.count()) / 1000.0);
    }
    run.report.actions_received = latencies.size();
    run.report.ack_latency.count = latencies.size();
    run.report.ack_latency.p50_ms = percentile(latencies, 50);
    run.report.ack_latency.p95_ms = percentile(latencies, 95);
    run.report.ack_latency.max_ms = latencies.empty() ? 0.0 : *std::max_element(latencies.begin(), latencies.end());
    return run;
}

}  // namespace classbot::gateway
