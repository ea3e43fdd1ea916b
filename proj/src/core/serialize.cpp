#include "classbot/core/serialize.hpp"

#include "classbot/core/error.hpp"

namespace classbot {

std::string_view to_string(ResponseType type) {
    switch (type) {
        case ResponseType::five_level: return "five_level";
        case ResponseType::percentage: return "percentage";
        case ResponseType::free_text: return "free_text";
    }
    return "five_level";
}

ResponseType parse_response_type(std::string_view text) {
    if (text == "five_level") return ResponseType::five_level;
    if (text == "percentage") return ResponseType::percentage;
    if (text == "free_text") return ResponseType::free_text;
    throw Error(ErrorKind::invalid_input, "unknown response_type '" + std::string(text) +
                                              "' (expected five_level, percentage or free_text)");
}

json timestamp_to_json(Timestamp ts) {
    return format_iso8601(ts);
}

Timestamp timestamp_from_json(const json& j) {
    return parse_iso8601(j.get<std::string>());
}

namespace {

void put_optional_ts(json& j, const char* key, const std::optional<Timestamp>& ts) {
    j[key] = ts ? timestamp_to_json(*ts) : json(nullptr);
}

std::optional<Timestamp> get_optional_ts(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return timestamp_from_json(j.at(key));
}

}  // namespace

void to_json(json& j, const BotInstance& bot) {
    j = json{{"id", bot.id},
             {"name", bot.name},
             {"guild_id", bot.guild_id},
             {"mode", bot.mode},
             {"state", bot.state},
             {"created_at", timestamp_to_json(bot.created_at)}};
}

void from_json(const json& j, BotInstance& bot) {
    bot.id = j.at("id").get<std::string>();
    bot.name = j.at("name").get<std::string>();
    bot.guild_id = j.at("guild_id").get<std::string>();
    bot.mode = j.at("mode").get<BotMode>();
    bot.state = j.at("state").get<BotState>();
    bot.created_at = timestamp_from_json(j.at("created_at"));
    bot.token_ref = token_ref_for(bot.id);
}

void to_json(json& j, const Group& group) {
    j = json{{"id", group.id}, {"channel_id", group.channel_id}, {"roster", group.roster}};
}

void from_json(const json& j, Group& group) {
    group.id = j.at("id").get<std::string>();
    group.channel_id = j.at("channel_id").get<std::string>();
    group.roster = j.value("roster", std::set<MemberId>{});
}

void to_json(json& j, const CheckIn& checkin) {
    j = json{{"student_id", checkin.student_id},
             {"display_name", checkin.display_name},
             {"at", timestamp_to_json(checkin.at)}};
}

void from_json(const json& j, CheckIn& checkin) {
    checkin.student_id = j.at("student_id").get<std::string>();
    checkin.display_name = j.at("display_name").get<std::string>();
    checkin.at = timestamp_from_json(j.at("at"));
}

void to_json(json& j, const AttendanceSession& session) {
    j = json{{"id", session.id},
             {"group_id", session.group_id},
             {"code", session.code},
             {"state", session.state},
             {"opened_at", timestamp_to_json(session.opened_at)},
             {"checkins", session.checkins}};
    put_optional_ts(j, "closed_at", session.closed_at);
}

void from_json(const json& j, AttendanceSession& session) {
    session.id = j.at("id").get<std::string>();
    session.group_id = j.at("group_id").get<std::string>();
    session.code = j.at("code").get<std::string>();
    session.state = j.at("state").get<SessionState>();
    session.opened_at = timestamp_from_json(j.at("opened_at"));
    session.closed_at = get_optional_ts(j, "closed_at");
    session.checkins = j.at("checkins").get<std::vector<CheckIn>>();
}

void to_json(json& j, const Question& question) {
    j = json{{"index", question.index},
             {"prompt", question.prompt},
             {"response_type", to_string(question.response_type)},
             {"options", question.options}};
}

void from_json(const json& j, Question& question) {
    question.index = j.at("index").get<int>();
    question.prompt = j.at("prompt").get<std::string>();
    question.response_type = parse_response_type(j.at("response_type").get<std::string>());
    question.options = j.value("options", std::vector<std::string>{});
}

void to_json(json& j, const SurveyDefinition& survey) {
    j = json{{"id", survey.id},
             {"kind", survey.kind},
             {"title", survey.title},
             {"channel_id", survey.channel_id},
             {"questions", survey.questions},
             {"duration_s", survey.duration ? json(survey.duration->count()) : json(nullptr)},
             {"state", survey.state}};
    put_optional_ts(j, "opened_at", survey.opened_at);
    put_optional_ts(j, "closed_at", survey.closed_at);
}

void from_json(const json& j, SurveyDefinition& survey) {
    survey.id = j.at("id").get<std::string>();
    survey.kind = j.at("kind").get<SurveyKind>();
    survey.title = j.at("title").get<std::string>();
    survey.channel_id = j.at("channel_id").get<std::string>();
    survey.questions = j.at("questions").get<std::vector<Question>>();
    if (j.contains("duration_s") && !j.at("duration_s").is_null()) {
        survey.duration = std::chrono::seconds{j.at("duration_s").get<std::int64_t>()};
    } else {
        survey.duration.reset();
    }
    survey.state = j.at("state").get<SurveyState>();
    survey.opened_at = get_optional_ts(j, "opened_at");
    survey.closed_at = get_optional_ts(j, "closed_at");
}

void to_json(json& j, const ResponseValue& value) {
    if (const auto* level = std::get_if<Level>(&value)) {
        j = json{{"level", level->value}};
    } else if (const auto* pct = std::get_if<Percent>(&value)) {
        j = json{{"percent", pct->value}};
    } else {
        j = json{{"text", std::get<FreeText>(value).text}};
    }
}

void from_json(const json& j, ResponseValue& value) {
    if (j.contains("level")) {
        value = Level{j.at("level").get<int>()};
    } else if (j.contains("percent")) {
        value = Percent{j.at("percent").get<int>()};
    } else if (j.contains("text")) {
        value = FreeText{j.at("text").get<std::string>()};
    } else {
        throw Error(ErrorKind::invalid_input, "response value needs level, percent or text");
    }
}

void to_json(json& j, const SurveyResponse& response) {
    j = json{{"survey_id", response.survey_id},
             {"question_index", response.question_index},
             {"student_id", response.student_id},
             {"value", response.value},
             {"at", timestamp_to_json(response.at)}};
}

void from_json(const json& j, SurveyResponse& response) {
    response.survey_id = j.at("survey_id").get<std::string>();
    response.question_index = j.at("question_index").get<int>();
    response.student_id = j.at("student_id").get<std::string>();
    response.value = j.at("value").get<ResponseValue>();
    response.at = timestamp_from_json(j.at("at"));
}

void to_json(json& j, const FeedbackResponse& response) {
    j = json{{"student_id", response.student_id},
             {"level", response.level},
             {"comment", response.comment ? json(*response.comment) : json(nullptr)},
             {"at", timestamp_to_json(response.at)}};
}

void from_json(const json& j, FeedbackResponse& response) {
    response.student_id = j.at("student_id").get<std::string>();
    response.level = j.at("level").get<int>();
    if (j.contains("comment") && !j.at("comment").is_null()) {
        response.comment = j.at("comment").get<std::string>();
    } else {
        response.comment.reset();
    }
    response.at = timestamp_from_json(j.at("at"));
}

void to_json(json& j, const FeedbackSession& session) {
    j = json{{"id", session.id},
             {"channel_id", session.channel_id},
             {"label", session.label},
             {"state", session.state},
             {"opened_at", timestamp_to_json(session.opened_at)},
             {"responses", session.responses}};
    put_optional_ts(j, "closed_at", session.closed_at);
}

void from_json(const json& j, FeedbackSession& session) {
    session.id = j.at("id").get<std::string>();
    session.channel_id = j.at("channel_id").get<std::string>();
    session.label = j.at("label").get<std::string>();
    session.state = j.at("state").get<SessionState>();
    session.opened_at = timestamp_from_json(j.at("opened_at"));
    session.closed_at = get_optional_ts(j, "closed_at");
    session.responses = j.at("responses").get<std::vector<FeedbackResponse>>();
}

void to_json(json& j, const Histogram& histogram) {
    json buckets = json::array();
    for (const auto& b : histogram.buckets) {
        buckets.push_back({{"label", b.label}, {"count", b.count}});
    }
    j = json{{"buckets", std::move(buckets)}, {"total", histogram.total}};
}

void from_json(const json& j, Histogram& histogram) {
    histogram.buckets.clear();
    for (const auto& b : j.at("buckets")) {
        histogram.buckets.push_back({b.at("label").get<std::string>(), b.at("count").get<std::uint64_t>()});
    }
    histogram.total = j.at("total").get<std::uint64_t>();
}

void to_json(json& j, const PresenceSnapshot& presence) {
    j = json{{"online", presence.online}, {"offline", presence.offline}, {"total", presence.total}};
}

void from_json(const json& j, PresenceSnapshot& presence) {
    presence.online = j.at("online").get<std::uint64_t>();
    presence.offline = j.at("offline").get<std::uint64_t>();
    presence.total = j.at("total").get<std::uint64_t>();
}

void to_json(json& j, const AuditEvent& event) {
    j = json{{"ts", timestamp_to_json(event.ts)},
             {"actor", event.actor},
             {"action", event.action},
             {"params", redact_params(event.params)},
             {"outcome", event.outcome},
             {"detail", event.detail}};
}

void from_json(const json& j, AuditEvent& event) {
    event.ts = timestamp_from_json(j.at("ts"));
    event.actor = j.at("actor").get<std::string>();
    event.action = j.at("action").get<std::string>();
    event.params = j.at("params").get<std::map<std::string, std::string>>();
    event.outcome = j.at("outcome").get<Outcome>();
    event.detail = j.value("detail", std::string{});
}

}  // namespace classbot
