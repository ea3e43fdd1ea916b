#include "classbot/gateway/guild.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"

namespace classbot::gateway {

GuildSpec GuildSpec::classroom(int students, const std::string& group_id) {
    GuildSpec spec;
    Group group{group_id, "lecture", {}};
    for (int i = 1; i <= students; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "s%03d", i);
        spec.members.push_back({id, "Student " + std::string(id + 1), true});
        group.roster.insert(id);
    }
    spec.groups.push_back(std::move(group));
    return spec;
}

void GuildSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_input, "guild: " + msg); };
    if (guild_id.empty()) {
        fail("guild_id is empty");
    }
    if (jitter_min_ms < 0 || jitter_max_ms < jitter_min_ms) {
        fail("latency jitter range must satisfy 0 <= min <= max");
    }
    if (std::find(roles.begin(), roles.end(), admin_role_id) == roles.end()) {
        fail("admin role '" + admin_role_id + "' is not among the roles");
    }
    std::set<ChannelId> channel_set(channels.begin(), channels.end());
    if (channel_set.size() != channels.size()) {
        fail("duplicate channel id");
    }
    std::set<MemberId> member_ids;
    for (const auto& m : members) {
        if (m.id.empty() || !member_ids.insert(m.id).second) {
            fail("member ids must be non-empty and unique ('" + m.id + "')");
        }
    }
    std::set<std::string> group_ids;
    for (const auto& g : groups) {
        if (g.id.empty() || !group_ids.insert(g.id).second) {
            fail("group ids must be non-empty and unique ('" + g.id + "')");
        }
        if (!channel_set.contains(g.channel_id)) {
            fail("group " + g.id + " posts to unknown channel '" + g.channel_id + "'");
        }
        for (const auto& r : g.roster) {
            if (!member_ids.contains(r)) {
                fail("group " + g.id + " lists unknown member '" + r + "'");
            }
        }
    }
    for (const auto& [purpose, channel] : default_channels) {
        if (!channel_set.contains(channel)) {
            fail("default channel for " + purpose + " is unknown ('" + channel + "')");
        }
    }
}

bool GuildSpec::has_channel(const ChannelId& id) const {
    return std::find(channels.begin(), channels.end(), id) != channels.end();
}

const Group* GuildSpec::find_group(const std::string& id) const {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.id == id; });
    return it == groups.end() ? nullptr : &*it;
}

GuildSpec guild_from_json(const nlohmann::json& j) {
    GuildSpec spec;
    if (j.contains("students")) {
        spec = GuildSpec::classroom(j.at("students").get<int>(), j.value("group", std::string{"g1"}));
    }
    spec.guild_id = j.value("guild_id", spec.guild_id);
    spec.admin_role_id = j.value("admin_role", spec.admin_role_id);
    spec.roles = j.value("roles", spec.roles);
    spec.channels = j.value("channels", spec.channels);
    if (j.contains("members")) {
        spec.members.clear();
        for (const auto& m : j.at("members")) {
            spec.members.push_back({m.at("id").get<std::string>(), m.value("name", m.at("id").get<std::string>()),
                                    m.value("online", true)});
        }
    }
    if (j.contains("groups")) {
        spec.groups.clear();
        for (const auto& g : j.at("groups")) {
            spec.groups.push_back(g.get<Group>());
        }
    }
    spec.default_channels = j.value("default_channels", spec.default_channels);
    if (j.contains("latency_jitter_ms")) {
        const auto& range = j.at("latency_jitter_ms");
        spec.jitter_min_ms = range.at(0).get<int>();
        spec.jitter_max_ms = range.at(1).get<int>();
    }
    spec.validate();
    return spec;
}

nlohmann::json guild_to_json(const GuildSpec& spec) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : spec.members) {
        members.push_back({{"id", m.id}, {"name", m.display_name}, {"online", m.online}});
    }
    return {{"guild_id", spec.guild_id},
            {"admin_role", spec.admin_role_id},
            {"roles", spec.roles},
            {"channels", spec.channels},
            {"members", std::move(members)},
            {"groups", spec.groups},
            {"default_channels", spec.default_channels},
            {"latency_jitter_ms", {spec.jitter_min_ms, spec.jitter_max_ms}}};
}

}  // namespace classbot::gateway
