#include "classbot/engine/command.hpp"

#include "classbot/core/serialize.hpp"

namespace classbot::engine {

namespace {

std::string required_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw Error(ErrorKind::invalid_input, std::string("missing string field '") + key + "'");
    }
    return j.at(key).get<std::string>();
}

std::optional<std::chrono::seconds> optional_duration(const nlohmann::json& j) {
    for (const char* key : {"duration", "duration_s"}) {
        if (j.contains(key) && !j.at(key).is_null()) {
            if (!j.at(key).is_number_integer()) {
                throw Error(ErrorKind::invalid_input, "duration must be an integer number of seconds");
            }
            return std::chrono::seconds{j.at(key).get<std::int64_t>()};
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view command_name(const CommandBody& body) {
    static constexpr std::string_view names[] = {
        "start_attendance", "stop_attendance", "create_simple_survey", "create_complex_survey",
        "close_survey",     "start_feedback",  "close_feedback",       "ping",
        "send_message",     "give_role",       "clear_messages"};
    return names[body.index()];
}

SurveyDefinition simple_survey_from_json(const nlohmann::json& j) {
    SurveyDefinition def;
    def.kind = SurveyKind::simple;
    def.channel_id = j.value("channel_id", std::string{});
    const std::string question = j.value("question", std::string{});
    def.title = j.value("title", question);
    def.questions.push_back(make_question(0, question, ResponseType::five_level));
    if (j.contains("options")) {
        def.questions[0].options = j.at("options").get<std::vector<std::string>>();
    }
    def.duration = optional_duration(j);
    return def;
}

SurveyDefinition complex_survey_from_json(const nlohmann::json& j) {
    SurveyDefinition def;
    def.kind = SurveyKind::complex;
    def.channel_id = j.value("channel_id", std::string{});
    def.title = j.value("title", std::string{});
    if (!j.contains("questions") || !j.at("questions").is_array()) {
        throw Error(ErrorKind::invalid_input, "missing 'questions' array");
    }
    int index = 0;
    for (const auto& q : j.at("questions")) {
        if (!q.is_object()) {
            throw Error(ErrorKind::invalid_input, "each question must be an object");
        }
        const auto type = parse_response_type(q.value("response_type", std::string{}));
        Question question = make_question(index++, q.value("prompt", std::string{}), type);
        if (q.contains("options") && type == ResponseType::five_level) {
            question.options = q.at("options").get<std::vector<std::string>>();
        }
        def.questions.push_back(std::move(question));
    }
    def.duration = optional_duration(j);
    return def;
}

Command command_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorKind::invalid_input, "command must be a JSON object");
    }
    Command cmd;
    cmd.actor = j.value("actor", std::string{"system"});
    const std::string type = required_string(j, "type");
    if (type == "start_attendance") {
        StartAttendance body{required_string(j, "group"), std::nullopt};
        if (j.contains("code")) {
            body.code = required_string(j, "code");
        }
        cmd.body = body;
    } else if (type == "stop_attendance") {
        cmd.body = StopAttendance{required_string(j, "group")};
    } else if (type == "create_simple_survey") {
        cmd.body = CreateSimpleSurvey{simple_survey_from_json(j)};
    } else if (type == "create_complex_survey") {
        cmd.body = CreateComplexSurvey{complex_survey_from_json(j)};
    } else if (type == "close_survey") {
        cmd.body = CloseSurvey{required_string(j, "survey_id")};
    } else if (type == "start_feedback") {
        cmd.body = StartFeedback{j.value("channel_id", std::string{}), required_string(j, "label")};
    } else if (type == "close_feedback") {
        cmd.body = CloseFeedback{required_string(j, "feedback_id")};
    } else if (type == "ping") {
        cmd.body = Ping{};
    } else if (type == "send_message") {
        cmd.body = SendGreeting{required_string(j, "member"), required_string(j, "text")};
    } else if (type == "give_role") {
        cmd.body = GiveRole{required_string(j, "member"), required_string(j, "role")};
    } else if (type == "clear_messages") {
        if (!j.contains("count") || !j.at("count").is_number_integer()) {
            throw Error(ErrorKind::invalid_input, "clear_messages needs an integer count");
        }
        cmd.body = ClearMessages{required_string(j, "channel"), j.at("count").get<int>()};
    } else {
        throw Error(ErrorKind::invalid_input, "unknown command type '" + type + "'");
    }
    return cmd;
}

}  // namespace classbot::engine
