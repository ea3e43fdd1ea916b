#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "classbot/core/types.hpp"
#include "classbot/gateway/chat.hpp"

namespace classbot::gateway {

/// Static layout of a simulated guild: channels, roles, members, groups and
/// the platform's latency jitter.
struct GuildSpec {
    std::string guild_id = "guild-1";
    std::string admin_role_id = "role-admin";
    std::vector<std::string> roles{"role-admin", "role-tutor", "role-student"};
    std::vector<ChannelId> channels{"general", "lecture", "surveys", "feedback"};
    std::vector<MemberInfo> members;
    std::vector<Group> groups;
    /// purpose ("attendance", "surveys", "feedback", "general") -> channel
    std::map<std::string, ChannelId> default_channels{
        {"general", "general"}, {"attendance", "lecture"}, {"surveys", "surveys"}, {"feedback", "feedback"}};
    int jitter_min_ms = 1;
    int jitter_max_ms = 3;

    /// Demo classroom: members s001..sNNN, all online, all in `group_id`
    /// posting to the "lecture" channel.
    static GuildSpec classroom(int students, const std::string& group_id = "g1");

    /// Throws Error{invalid_input} naming the first problem.
    void validate() const;

    bool has_channel(const ChannelId& id) const;
    const Group* find_group(const std::string& id) const;
};

/// Accepts the full form or the shorthand {"students": N, "group": "g1"}.
GuildSpec guild_from_json(const nlohmann::json& j);
nlohmann::json guild_to_json(const GuildSpec& spec);

}  // namespace classbot::gateway
