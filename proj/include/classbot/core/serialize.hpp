#pragma once

// JSON mappings for the domain types. Timestamps are ISO-8601 UTC strings.

#include <json.hpp>

#include "classbot/core/types.hpp"

namespace classbot {

using json = nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(BotMode, {{BotMode::development, "development"},
                                       {BotMode::production, "production"}})
NLOHMANN_JSON_SERIALIZE_ENUM(BotState, {{BotState::stopped, "stopped"},
                                        {BotState::starting, "starting"},
                                        {BotState::running, "running"},
                                        {BotState::error, "error"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SessionState, {{SessionState::open, "open"},
                                            {SessionState::closed, "closed"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SurveyKind, {{SurveyKind::simple, "simple"},
                                          {SurveyKind::complex, "complex"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SurveyState, {{SurveyState::draft, "draft"},
                                           {SurveyState::open, "open"},
                                           {SurveyState::closed, "closed"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Outcome, {{Outcome::success, "success"}, {Outcome::error, "error"}})

std::string_view to_string(ResponseType type);
/// Throws Error{invalid_input} naming the unknown value.
ResponseType parse_response_type(std::string_view text);

json timestamp_to_json(Timestamp ts);
Timestamp timestamp_from_json(const json& j);

/// Omits token_ref; restoring derives it from the id.
void to_json(json& j, const BotInstance& bot);
void from_json(const json& j, BotInstance& bot);

void to_json(json& j, const Group& group);
void from_json(const json& j, Group& group);

void to_json(json& j, const CheckIn& checkin);
void from_json(const json& j, CheckIn& checkin);

void to_json(json& j, const AttendanceSession& session);
void from_json(const json& j, AttendanceSession& session);

void to_json(json& j, const Question& question);
void from_json(const json& j, Question& question);

void to_json(json& j, const SurveyDefinition& survey);
void from_json(const json& j, SurveyDefinition& survey);

void to_json(json& j, const ResponseValue& value);
void from_json(const json& j, ResponseValue& value);

void to_json(json& j, const SurveyResponse& response);
void from_json(const json& j, SurveyResponse& response);

void to_json(json& j, const FeedbackResponse& response);
void from_json(const json& j, FeedbackResponse& response);

void to_json(json& j, const FeedbackSession& session);
void from_json(const json& j, FeedbackSession& session);

void to_json(json& j, const Histogram& histogram);
void from_json(const json& j, Histogram& histogram);

void to_json(json& j, const PresenceSnapshot& presence);
void from_json(const json& j, PresenceSnapshot& presence);

/// Params are redacted on the way out.
void to_json(json& j, const AuditEvent& event);
void from_json(const json& j, AuditEvent& event);

}  // namespace classbot
