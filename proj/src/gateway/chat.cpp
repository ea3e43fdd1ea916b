#include "classbot/gateway/chat.hpp"

#include <set>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"

namespace classbot::gateway {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_buttons(const std::vector<Button>& buttons) {
    std::set<std::string> seen;
    for (const auto& b : buttons) {
        if (b.id.empty() || !seen.insert(b.id).second) {
            throw Error(ErrorKind::invalid_input, "button ids must be non-empty and unique ('" + b.id + "')");
        }
    }
}

nlohmann::json buttons_json(const std::vector<Button>& buttons) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : buttons) {
        out.push_back({{"id", b.id}, {"label", b.label}});
    }
    return out;
}

}  // namespace

void validate_action(const ChatAction& action) {
    std::visit(overloaded{
                   [](const PostMessage& a) { check_buttons(a.buttons); },
                   [](const SendDM& a) { check_buttons(a.buttons); },
                   [](const EditMessage& a) { check_buttons(a.buttons); },
                   [](const DeleteMessages& a) {
                       if (a.count < 1) {
                           throw Error(ErrorKind::invalid_input, "delete count must be at least 1");
                       }
                   },
                   [](const AssignRole&) {},
                   [](const QueryPresence&) {},
               },
               action);
}

std::string_view action_name(const ChatAction& action) {
    static constexpr std::string_view names[] = {"post_message",    "send_dm",     "edit_message",
                                                 "delete_messages", "assign_role", "query_presence"};
    return names[action.index()];
}

Timestamp event_time(const ChatEvent& event) {
    return std::visit([](const auto& e) { return e.at; }, event);
}

nlohmann::json event_to_json(const ChatEvent& event) {
    return std::visit(
        overloaded{
            [](const ChannelMessage& e) -> nlohmann::json {
                return {{"type", "channel_message"},
                        {"channel_id", e.channel_id},
                        {"member_id", e.member_id},
                        {"text", e.text},
                        {"at", format_iso8601(e.at)}};
            },
            [](const DirectMessage& e) -> nlohmann::json {
                return {{"type", "direct_message"},
                        {"member_id", e.member_id},
                        {"text", e.text},
                        {"at", format_iso8601(e.at)}};
            },
            [](const ButtonClick& e) -> nlohmann::json {
                return {{"type", "button_click"},
                        {"message_ref", e.message_ref},
                        {"member_id", e.member_id},
                        {"button_id", e.button_id},
                        {"at", format_iso8601(e.at)}};
            },
            [](const PresenceReport& e) -> nlohmann::json {
                return {{"type", "presence_report"}, {"snapshot", e.snapshot}, {"at", format_iso8601(e.at)}};
            },
            [](const MemberStateChange& e) -> nlohmann::json {
                return {{"type", "member_state_change"},
                        {"member_id", e.member_id},
                        {"online", e.online},
                        {"at", format_iso8601(e.at)}};
            },
        },
        event);
}

ChatEvent event_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    const Timestamp at = parse_iso8601(j.at("at").get<std::string>());
    if (type == "channel_message") {
        return ChannelMessage{j.at("channel_id").get<std::string>(), j.at("member_id").get<std::string>(),
                              j.at("text").get<std::string>(), at};
    }
    if (type == "direct_message") {
        return DirectMessage{j.at("member_id").get<std::string>(), j.at("text").get<std::string>(), at};
    }
    if (type == "button_click") {
        return ButtonClick{j.at("message_ref").get<MessageRef>(), j.at("member_id").get<std::string>(),
                           j.at("button_id").get<std::string>(), at};
    }
    if (type == "presence_report") {
        return PresenceReport{j.at("snapshot").get<PresenceSnapshot>(), at};
    }
    if (type == "member_state_change") {
        return MemberStateChange{j.at("member_id").get<std::string>(), j.at("online").get<bool>(), at};
    }
    throw Error(ErrorKind::invalid_input, "unknown event type '" + type + "'");
}

nlohmann::json action_to_json(const ChatAction& action) {
    nlohmann::json j = std::visit(
        overloaded{
            [](const PostMessage& a) -> nlohmann::json {
                return {{"channel_id", a.channel_id}, {"text", a.text}, {"buttons", buttons_json(a.buttons)}};
            },
            [](const SendDM& a) -> nlohmann::json {
                return {{"member_id", a.member_id}, {"text", a.text}, {"buttons", buttons_json(a.buttons)}};
            },
            [](const EditMessage& a) -> nlohmann::json {
                return {{"message_ref", a.message_ref}, {"text", a.text}, {"buttons", buttons_json(a.buttons)}};
            },
            [](const DeleteMessages& a) -> nlohmann::json {
                return {{"channel_id", a.channel_id}, {"count", a.count}};
            },
            [](const AssignRole& a) -> nlohmann::json {
                return {{"member_id", a.member_id}, {"role_id", a.role_id}};
            },
            [](const QueryPresence&) -> nlohmann::json { return nlohmann::json::object(); },
        },
        action);
    j["type"] = std::string(action_name(action));
    return j;
}

}  // namespace classbot::gateway
