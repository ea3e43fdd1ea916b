#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "classbot/core/error.hpp"
#include "classbot/core/types.hpp"

namespace classbot::engine {

/// Shared state handed to every handler when a bot starts.
struct EngineContext {
    std::string server_url;
    std::string api_token_ref;
    std::string guild_id;
    /// purpose -> channel ("attendance", "surveys", "feedback", "general")
    std::map<std::string, ChannelId> default_channels;
    std::map<std::string, std::string> runtime_flags;
    std::string admin_role_id;
};

struct StartAttendance {
    std::string group_id;
    /// Generated uniformly from 0000-9999 when absent.
    std::optional<std::string> code;
};
struct StopAttendance {
    std::string group_id;
};
struct CreateSimpleSurvey {
    SurveyDefinition def;
};
struct CreateComplexSurvey {
    SurveyDefinition def;
};
struct CloseSurvey {
    std::string survey_id;
};
struct StartFeedback {
    ChannelId channel_id;
    std::string label;
};
struct CloseFeedback {
    std::string feedback_id;
};
struct Ping {};
struct SendGreeting {
    MemberId member_id;
    std::string text;
};
struct GiveRole {
    MemberId member_id;
    std::string role_id;
};
struct ClearMessages {
    ChannelId channel_id;
    int count = 1;
};

using CommandBody = std::variant<StartAttendance, StopAttendance, CreateSimpleSurvey, CreateComplexSurvey,
                                 CloseSurvey, StartFeedback, CloseFeedback, Ping, SendGreeting, GiveRole,
                                 ClearMessages>;

struct Command {
    /// key_id of the issuing instructor, or "system".
    std::string actor = "system";
    CommandBody body;
};

std::string_view command_name(const CommandBody& body);

/// Request-body forms shared by the REST layer and scenario files.
/// {channel_id?, question, options?, duration?}
SurveyDefinition simple_survey_from_json(const nlohmann::json& j);
/// {channel_id?, title, questions: [{prompt, response_type, options?}], duration?}
SurveyDefinition complex_survey_from_json(const nlohmann::json& j);

/// Parses the scenario-file command form, e.g.
/// {"type":"start_attendance","group":"g1","code":"1423"}.
Command command_from_json(const nlohmann::json& j);

enum class CommandStatus { success, error };

struct CommandResult {
    CommandStatus status = CommandStatus::success;
    ErrorKind error = ErrorKind::internal;
    std::string message;
    nlohmann::json payload = nlohmann::json::object();

    bool ok() const { return status == CommandStatus::success; }

    static CommandResult success(std::string message, nlohmann::json payload = nlohmann::json::object()) {
        return {CommandStatus::success, ErrorKind::internal, std::move(message), std::move(payload)};
    }
    static CommandResult failure(ErrorKind kind, std::string message) {
        return {CommandStatus::error, kind, std::move(message), nlohmann::json::object()};
    }
};

}  // namespace classbot::engine
