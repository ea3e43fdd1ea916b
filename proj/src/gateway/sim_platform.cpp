#include "classbot/gateway/sim_platform.hpp"

#include <algorithm>

#include "classbot/core/error.hpp"

namespace classbot::gateway {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr std::size_t kActionLogCap = 200000;

}  // namespace

SimPlatform::SimPlatform(GuildSpec spec, std::uint64_t seed, Clock& clock)
    : spec_(std::move(spec)), clock_(clock), rng_(seed) {
    spec_.validate();
    for (const auto& m : spec_.members) {
        members_.emplace(m.id, m);
    }
}

ActionAck SimPlatform::submit_action(const ChatAction& action, const ActingContext& as) {
    validate_action(action);
    ActionAck ack;
    std::chrono::microseconds latency{0};
    {
        std::lock_guard lock(mu_);
        if (!reachable_) {
            throw Error(ErrorKind::unavailable, "chat platform is unreachable");
        }
        latency = draw_latency_locked();
        ActionRecord record{++action_seq_, action, latency, true};
        try {
            ack = apply_locked(action, as);
        } catch (...) {
            record.ok = false;
            log_.push_back(std::move(record));
            throw;
        }
        if (log_.size() >= kActionLogCap) {
            log_.erase(log_.begin(), log_.begin() + kActionLogCap / 2);
        }
        log_.push_back(std::move(record));
    }
    clock_.wait(latency);
    return ack;
}

ActionAck SimPlatform::apply_locked(const ChatAction& action, const ActingContext& as) {
    auto require_admin = [&](std::string_view what) {
        if (as.role_id != spec_.admin_role_id) {
            throw Error(ErrorKind::permission_denied,
                        std::string(what) + " requires the admin role (acting as '" + as.role_id + "')");
        }
    };
    auto require_channel = [&](const ChannelId& id) {
        if (!spec_.has_channel(id)) {
            throw Error(ErrorKind::not_found, "unknown channel '" + id + "'");
        }
    };
    auto require_member = [&](const MemberId& id) {
        if (!members_.contains(id)) {
            throw Error(ErrorKind::not_found, "unknown member '" + id + "'");
        }
    };

    return std::visit(
        overloaded{
            [&](const PostMessage& a) {
                require_channel(a.channel_id);
                const MessageRef ref = next_ref_++;
                messages_.emplace(ref, StoredMessage{ref, a.channel_id, {}, a.text, a.buttons, 0});
                return ActionAck{ref, std::nullopt, std::nullopt};
            },
            [&](const SendDM& a) {
                require_member(a.member_id);
                const MessageRef ref = next_ref_++;
                messages_.emplace(ref, StoredMessage{ref, {}, a.member_id, a.text, a.buttons, 0});
                return ActionAck{ref, std::nullopt, std::nullopt};
            },
            [&](const EditMessage& a) {
                auto it = messages_.find(a.message_ref);
                if (it == messages_.end()) {
                    throw Error(ErrorKind::not_found, "unknown message " + std::to_string(a.message_ref));
                }
                it->second.text = a.text;
                it->second.buttons = a.buttons;
                ++it->second.edits;
                return ActionAck{};
            },
            [&](const DeleteMessages& a) {
                require_admin("deleting messages");
                require_channel(a.channel_id);
                std::vector<MessageRef> in_channel;
                for (const auto& [ref, msg] : messages_) {
                    if (msg.channel_id == a.channel_id) {
                        in_channel.push_back(ref);
                    }
                }
                const int n = std::min<int>(a.count, static_cast<int>(in_channel.size()));
                for (int i = 0; i < n; ++i) {
                    messages_.erase(in_channel[in_channel.size() - 1 - static_cast<std::size_t>(i)]);
                }
                return ActionAck{std::nullopt, n, std::nullopt};
            },
            [&](const AssignRole& a) {
                require_admin("assigning roles");
                require_member(a.member_id);
                if (std::find(spec_.roles.begin(), spec_.roles.end(), a.role_id) == spec_.roles.end()) {
                    throw Error(ErrorKind::not_found, "unknown role '" + a.role_id + "'");
                }
                auto& roles = member_roles_[a.member_id];
                if (std::find(roles.begin(), roles.end(), a.role_id) == roles.end()) {
                    roles.push_back(a.role_id);
                }
                return ActionAck{};
            },
            [&](const QueryPresence&) {
                std::map<MemberId, MemberStatus> states;
                for (const auto& [id, m] : members_) {
                    states.emplace(id, m.online ? MemberStatus::online : MemberStatus::offline);
                }
                return ActionAck{std::nullopt, std::nullopt, presence_of(states)};
            },
        },
        action);
}

std::chrono::microseconds SimPlatform::draw_latency_locked() {
    const auto span = static_cast<std::uint64_t>(spec_.jitter_max_ms - spec_.jitter_min_ms + 1);
    const auto ms = static_cast<std::int64_t>(spec_.jitter_min_ms) + static_cast<std::int64_t>(rng_() % span);
    return std::chrono::milliseconds{ms};
}

std::optional<ChatEvent> SimPlatform::next_event() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty() || !stream_open_; });
    if (queue_.empty()) {
        return std::nullopt;
    }
    ChatEvent ev = std::move(queue_.front());
    queue_.pop_front();
    return ev;
}

std::optional<ChatEvent> SimPlatform::poll_event() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) {
        return std::nullopt;
    }
    ChatEvent ev = std::move(queue_.front());
    queue_.pop_front();
    return ev;
}

std::optional<MemberInfo> SimPlatform::lookup_member(const MemberId& id) const {
    std::lock_guard lock(mu_);
    auto it = members_.find(id);
    if (it == members_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<MemberInfo> SimPlatform::members() const {
    std::lock_guard lock(mu_);
    std::vector<MemberInfo> out;
    out.reserve(members_.size());
    for (const auto& [id, m] : members_) {
        out.push_back(m);
    }
    return out;
}

Timestamp SimPlatform::stamp_locked(const MemberId& member) {
    Timestamp at = clock_.now();
    auto& last = last_event_at_[member];
    at = std::max(at, last);
    last = at;
    return at;
}

void SimPlatform::push_locked(ChatEvent event) {
    queue_.push_back(std::move(event));
    cv_.notify_one();
}

std::optional<ChatEvent> SimPlatform::member_dm(const MemberId& member, const std::string& text) {
    std::lock_guard lock(mu_);
    if (!members_.contains(member)) {
        throw Error(ErrorKind::not_found, "unknown member '" + member + "'");
    }
    ChatEvent ev = DirectMessage{member, text, stamp_locked(member)};
    push_locked(ev);
    return ev;
}

std::optional<MessageRef> SimPlatform::resolve_locked(const MemberId& member, const ClickTarget& target,
                                                      const std::string& button_id) const {
    auto has_button = [&](const StoredMessage& m) {
        return std::any_of(m.buttons.begin(), m.buttons.end(), [&](const Button& b) { return b.id == button_id; });
    };
    if (target.message_ref) {
        auto it = messages_.find(*target.message_ref);
        if (it == messages_.end() || !has_button(it->second)) {
            return std::nullopt;
        }
        return it->first;
    }
    for (auto it = messages_.rbegin(); it != messages_.rend(); ++it) {
        const StoredMessage& m = it->second;
        const bool matches = target.dm ? m.recipient == member
                                       : (target.channel && m.channel_id == *target.channel);
        if (matches && has_button(m)) {
            return m.ref;
        }
    }
    return std::nullopt;
}

std::optional<ChatEvent> SimPlatform::member_click(const MemberId& member, const ClickTarget& target,
                                                   const std::string& button_id) {
    std::lock_guard lock(mu_);
    if (!members_.contains(member)) {
        throw Error(ErrorKind::not_found, "unknown member '" + member + "'");
    }
    const auto ref = resolve_locked(member, target, button_id);
    if (!ref) {
        return std::nullopt;
    }
    ChatEvent ev = ButtonClick{*ref, member, button_id, stamp_locked(member)};
    push_locked(ev);
    return ev;
}

std::optional<ChatEvent> SimPlatform::member_set_online(const MemberId& member, bool online) {
    std::lock_guard lock(mu_);
    auto it = members_.find(member);
    if (it == members_.end()) {
        throw Error(ErrorKind::not_found, "unknown member '" + member + "'");
    }
    it->second.online = online;
    ChatEvent ev = MemberStateChange{member, online, stamp_locked(member)};
    push_locked(ev);
    return ev;
}

void SimPlatform::set_reachable(bool reachable) {
    std::lock_guard lock(mu_);
    reachable_ = reachable;
}

bool SimPlatform::reachable() const {
    std::lock_guard lock(mu_);
    return reachable_;
}

void SimPlatform::end_stream() {
    std::lock_guard lock(mu_);
    stream_open_ = false;
    cv_.notify_all();
}

void SimPlatform::reopen_stream() {
    std::lock_guard lock(mu_);
    stream_open_ = true;
}

std::vector<StoredMessage> SimPlatform::channel_messages(const ChannelId& channel) const {
    std::lock_guard lock(mu_);
    std::vector<StoredMessage> out;
    for (const auto& [ref, m] : messages_) {
        if (m.channel_id == channel) {
            out.push_back(m);
        }
    }
    return out;
}

std::vector<StoredMessage> SimPlatform::dms_to(const MemberId& member) const {
    std::lock_guard lock(mu_);
    std::vector<StoredMessage> out;
    for (const auto& [ref, m] : messages_) {
        if (m.recipient == member) {
            out.push_back(m);
        }
    }
    return out;
}

std::optional<StoredMessage> SimPlatform::message(MessageRef ref) const {
    std::lock_guard lock(mu_);
    auto it = messages_.find(ref);
    if (it == messages_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<ActionRecord> SimPlatform::action_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::vector<std::string> SimPlatform::roles_of(const MemberId& member) const {
    std::lock_guard lock(mu_);
    auto it = member_roles_.find(member);
    return it == member_roles_.end() ? std::vector<std::string>{} : it->second;
}

PresenceSnapshot SimPlatform::presence() const {
    std::lock_guard lock(mu_);
    std::map<MemberId, MemberStatus> states;
    for (const auto& [id, m] : members_) {
        states.emplace(id, m.online ? MemberStatus::online : MemberStatus::offline);
    }
    return presence_of(states);
}

std::size_t SimPlatform::pending_events() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

}  // namespace classbot::gateway
