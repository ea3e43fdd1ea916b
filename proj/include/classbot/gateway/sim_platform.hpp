#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "classbot/core/time.hpp"
#include "classbot/gateway/chat.hpp"
#include "classbot/gateway/guild.hpp"

namespace classbot::gateway {

/// A message as the simulated platform stores it.
struct StoredMessage {
    MessageRef ref = 0;
    /// Channel id, or empty for a DM.
    ChannelId channel_id;
    /// Recipient of a DM, empty for channel posts.
    MemberId recipient;
    std::string text;
    std::vector<Button> buttons;
    int edits = 0;
};

struct ActionRecord {
    std::uint64_t seq = 0;
    ChatAction action;
    std::chrono::microseconds latency{0};
    bool ok = true;
};

/// Where a scripted click lands. Resolved against messages that have
/// already been acknowledged when the step runs.
struct ClickTarget {
    std::optional<MessageRef> message_ref;
    /// Most recent channel post carrying the button.
    std::optional<ChannelId> channel;
    /// Most recent DM to the clicking member carrying the button.
    bool dm = false;
};

/// In-process chat platform. Message refs are a per-guild counter starting
/// at 1; ack latency is drawn from a mt19937_64 seeded with the scenario
/// seed, mapped onto [jitter_min_ms, jitter_max_ms] by modulo, and spent via
/// Clock::wait (virtual advance or real sleep).
class SimPlatform final : public ChatGateway {
public:
    SimPlatform(GuildSpec spec, std::uint64_t seed, Clock& clock);

    ActionAck submit_action(const ChatAction& action, const ActingContext& as) override;
    std::optional<ChatEvent> next_event() override;
    std::optional<MemberInfo> lookup_member(const MemberId& id) const override;
    std::vector<MemberInfo> members() const override;

    /// Non-blocking variant of next_event for single-threaded drivers.
    std::optional<ChatEvent> poll_event();

    /// Member behaviors. Each returns the event it queued, or nullopt when a
    /// click target cannot be resolved. Unknown members throw not_found.
    std::optional<ChatEvent> member_dm(const MemberId& member, const std::string& text);
    std::optional<ChatEvent> member_click(const MemberId& member, const ClickTarget& target,
                                          const std::string& button_id);
    std::optional<ChatEvent> member_set_online(const MemberId& member, bool online);

    /// Fault injection: while unreachable every submit_action throws
    /// Error{unavailable}.
    void set_reachable(bool reachable);
    bool reachable() const;

    /// Ends the event stream once the queue drains; wakes blocked readers.
    void end_stream();
    /// Reopens the stream after end_stream (bot restart).
    void reopen_stream();

    std::vector<StoredMessage> channel_messages(const ChannelId& channel) const;
    std::vector<StoredMessage> dms_to(const MemberId& member) const;
    std::optional<StoredMessage> message(MessageRef ref) const;
    std::vector<ActionRecord> action_log() const;
    std::vector<std::string> roles_of(const MemberId& member) const;
    PresenceSnapshot presence() const;
    const GuildSpec& spec() const { return spec_; }
    std::size_t pending_events() const;

private:
    ActionAck apply_locked(const ChatAction& action, const ActingContext& as);
    std::optional<MessageRef> resolve_locked(const MemberId& member, const ClickTarget& target,
                                             const std::string& button_id) const;
    std::chrono::microseconds draw_latency_locked();
    Timestamp stamp_locked(const MemberId& member);
    void push_locked(ChatEvent event);

    GuildSpec spec_;
    Clock& clock_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::mt19937_64 rng_;
    bool reachable_ = true;
    bool stream_open_ = true;
    MessageRef next_ref_ = 1;
    std::uint64_t action_seq_ = 0;
    std::map<MemberId, MemberInfo> members_;
    std::map<MemberId, std::vector<std::string>> member_roles_;
    std::map<MessageRef, StoredMessage> messages_;
    std::map<MemberId, Timestamp> last_event_at_;
    std::deque<ChatEvent> queue_;
    std::vector<ActionRecord> log_;
};

}  // namespace classbot::gateway
