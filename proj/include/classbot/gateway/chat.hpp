#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "classbot/core/types.hpp"

namespace classbot::gateway {

using MessageRef = std::uint64_t;

struct Button {
    std::string id;
    std::string label;

    bool operator==(const Button&) const = default;
};

// Actions: engine -> platform

struct PostMessage {
    ChannelId channel_id;
    std::string text;
    std::vector<Button> buttons;
};

struct SendDM {
    MemberId member_id;
    std::string text;
    std::vector<Button> buttons;
};

struct EditMessage {
    MessageRef message_ref = 0;
    std::string text;
    std::vector<Button> buttons;
};

struct DeleteMessages {
    ChannelId channel_id;
    int count = 1;
};

struct AssignRole {
    MemberId member_id;
    std::string role_id;
};

struct QueryPresence {};

using ChatAction = std::variant<PostMessage, SendDM, EditMessage, DeleteMessages, AssignRole, QueryPresence>;

/// Throws Error{invalid_input} for duplicate button ids or a non-positive
/// delete count.
void validate_action(const ChatAction& action);

std::string_view action_name(const ChatAction& action);

struct ActionAck {
    /// Set for PostMessage and SendDM.
    std::optional<MessageRef> message_ref;
    /// Set for DeleteMessages: how many were actually removed.
    std::optional<int> deleted;
    /// Set for QueryPresence.
    std::optional<PresenceSnapshot> presence;
};

// Events: platform -> engine

struct ChannelMessage {
    ChannelId channel_id;
    MemberId member_id;
    std::string text;
    Timestamp at{};
};

struct DirectMessage {
    MemberId member_id;
    std::string text;
    Timestamp at{};
};

struct ButtonClick {
    MessageRef message_ref = 0;
    MemberId member_id;
    std::string button_id;
    Timestamp at{};
};

struct PresenceReport {
    PresenceSnapshot snapshot;
    Timestamp at{};
};

struct MemberStateChange {
    MemberId member_id;
    bool online = true;
    Timestamp at{};
};

using ChatEvent = std::variant<ChannelMessage, DirectMessage, ButtonClick, PresenceReport, MemberStateChange>;

Timestamp event_time(const ChatEvent& event);

/// One JSON object per event with a "type" discriminator. The event-stream
/// files written by scenario runs are these objects, one per line.
nlohmann::json event_to_json(const ChatEvent& event);
ChatEvent event_from_json(const nlohmann::json& j);
nlohmann::json action_to_json(const ChatAction& action);

struct MemberInfo {
    MemberId id;
    std::string display_name;
    bool online = true;
};

/// Authority an action is submitted under. Administrative actions
/// (DeleteMessages, AssignRole) require the guild's admin role.
struct ActingContext {
    std::string actor;
    std::string role_id;
};

/// Boundary between the interaction engine and a chat platform.
///
/// A production adapter implements the same surface and adds a connection
/// contract: on loss of the platform connection `submit_action` throws
/// Error{unavailable}, the adapter reconnects with exponential backoff, and
/// `next_event` resumes delivery after reconnecting. Only the simulated
/// platform ships with this project.
class ChatGateway {
public:
    virtual ~ChatGateway() = default;

    /// Throws Error{not_found} for unknown channels, members, messages or
    /// roles; Error{unavailable} when the platform is unreachable;
    /// Error{permission_denied} when `as` lacks the required role.
    virtual ActionAck submit_action(const ChatAction& action, const ActingContext& as) = 0;

    /// Blocks until an event is available. nullopt means the stream ended.
    virtual std::optional<ChatEvent> next_event() = 0;

    virtual std::optional<MemberInfo> lookup_member(const MemberId& id) const = 0;
    virtual std::vector<MemberInfo> members() const = 0;
};

}  // namespace classbot::gateway
