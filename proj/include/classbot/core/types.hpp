#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "classbot/core/time.hpp"

namespace classbot {

using MemberId = std::string;
using ChannelId = std::string;

// ---------------------------------------------------------------------------
// Bot instances

enum class BotMode { development, production };
enum class BotState { stopped, starting, running, error };

/// stopped -> starting -> running -> stopped, and any -> error -> stopped.
bool is_valid_transition(BotState from, BotState to);

struct BotInstance {
    std::string id;
    std::string name;
    /// Name of the secrets-store entry holding the platform token. Never
    /// serialized into API responses, audit events or the registry.
    std::string token_ref;
    std::string guild_id;
    BotMode mode = BotMode::development;
    BotState state = BotState::stopped;
    Timestamp created_at{};

    /// Throws Error{invalid_input} when the transition is not allowed.
    void transition_to(BotState next);

    bool operator==(const BotInstance&) const = default;
};

/// Deterministic secrets-store key for a bot's platform token.
std::string token_ref_for(const std::string& bot_id);

// ---------------------------------------------------------------------------
// Attendance

struct Group {
    std::string id;
    ChannelId channel_id;
    /// An empty roster admits every guild member.
    std::set<MemberId> roster;

    bool admits(const MemberId& member) const {
        return roster.empty() || roster.contains(member);
    }

    bool operator==(const Group&) const = default;
};

enum class SessionState { open, closed };

struct CheckIn {
    MemberId student_id;
    std::string display_name;
    Timestamp at{};

    bool operator==(const CheckIn&) const = default;
};

/// True iff code is exactly four ASCII decimal digits.
bool validate_attendance_code(std::string_view code);

struct AttendanceSession {
    std::string id;
    std::string group_id;
    std::string code;
    SessionState state = SessionState::open;
    Timestamp opened_at{};
    std::optional<Timestamp> closed_at;
    std::vector<CheckIn> checkins;

    bool has_checked_in(const MemberId& student) const;

    /// Records a check-in. Returns false (and changes nothing) when the
    /// student already checked in. Throws Error{conflict} when closed and
    /// Error{invalid_input} for an empty id or a timestamp before opened_at.
    bool add_checkin(CheckIn checkin);

    /// Throws Error{conflict} when already closed.
    void close(Timestamp at);

    std::size_t present_count() const { return checkins.size(); }

    bool operator==(const AttendanceSession&) const = default;
};

// ---------------------------------------------------------------------------
// Surveys

enum class SurveyKind { simple, complex };
enum class ResponseType { five_level, percentage, free_text };
enum class SurveyState { draft, open, closed };

/// The five verbal difficulty labels used when a five-level question is
/// created without explicit options.
const std::vector<std::string>& default_difficulty_labels();

/// Five satisfaction labels used by feedback dialogs.
const std::vector<std::string>& satisfaction_labels();

struct Question {
    int index = 0;
    std::string prompt;
    ResponseType response_type = ResponseType::five_level;
    std::vector<std::string> options;

    bool operator==(const Question&) const = default;
};

/// Builds a question, filling in the default labels for five-level.
Question make_question(int index, std::string prompt, ResponseType type);

struct SurveyDefinition {
    std::string id;
    SurveyKind kind = SurveyKind::simple;
    std::string title;
    ChannelId channel_id;
    std::vector<Question> questions;
    std::optional<std::chrono::seconds> duration;
    SurveyState state = SurveyState::draft;
    std::optional<Timestamp> opened_at;
    std::optional<Timestamp> closed_at;

    /// Throws Error{invalid_input} naming the first violated rule.
    void validate() const;

    bool operator==(const SurveyDefinition&) const = default;
};

struct Level {
    int value = 0;
    bool operator==(const Level&) const = default;
};
struct Percent {
    int value = 0;
    bool operator==(const Percent&) const = default;
};
struct FreeText {
    std::string text;
    bool operator==(const FreeText&) const = default;
};

using ResponseValue = std::variant<Level, Percent, FreeText>;

ResponseType response_type_of(const ResponseValue& value);

/// Throws Error{invalid_input} if the variant does not match the question
/// or the value is out of range.
void check_response_value(const ResponseValue& value, const Question& question);

/// Interprets a chat reply as an answer to `question`: digits 1-5 or a label
/// for five-level, 0-100 with optional '%' for percentage, any non-blank
/// text for free text.
std::optional<ResponseValue> parse_answer(std::string_view text, const Question& question);

/// Renders the value the way CSV exports store it.
std::string value_to_string(const ResponseValue& value);

struct SurveyResponse {
    std::string survey_id;
    int question_index = 0;
    MemberId student_id;
    ResponseValue value;
    Timestamp at{};

    bool operator==(const SurveyResponse&) const = default;
};

// ---------------------------------------------------------------------------
// Feedback

struct FeedbackResponse {
    MemberId student_id;
    int level = 0;
    std::optional<std::string> comment;
    Timestamp at{};

    bool operator==(const FeedbackResponse&) const = default;
};

struct FeedbackSession {
    std::string id;
    ChannelId channel_id;
    std::string label;
    SessionState state = SessionState::open;
    Timestamp opened_at{};
    std::optional<Timestamp> closed_at;
    std::vector<FeedbackResponse> responses;

    /// Last write wins per student. Returns true if an earlier response was
    /// replaced. Throws Error{invalid_input} for a level outside 1..5.
    bool record(FeedbackResponse response);

    bool operator==(const FeedbackSession&) const = default;
};

// ---------------------------------------------------------------------------
// Aggregates

struct HistogramBucket {
    std::string label;
    std::uint64_t count = 0;

    bool operator==(const HistogramBucket&) const = default;
};

struct Histogram {
    std::vector<HistogramBucket> buckets;
    std::uint64_t total = 0;

    bool operator==(const Histogram&) const = default;
};

/// Trim + ASCII case-fold.
std::string normalize_free_text(std::string_view text);

/// Decile bucket for a percentage: 0-9 -> 0, ..., 90-100 -> 9.
int percent_bucket(int percent);

/// Counts responses per option (five-level), per decile (percentage) or per
/// distinct normalized text (free text, sorted by text). Throws
/// Error{invalid_input} on a variant mismatch.
Histogram aggregate_survey(const std::vector<SurveyResponse>& responses, const Question& question);

Histogram aggregate_feedback(const FeedbackSession& session);

// ---------------------------------------------------------------------------
// Presence

enum class MemberStatus { online, offline };

struct PresenceSnapshot {
    std::uint64_t online = 0;
    std::uint64_t offline = 0;
    std::uint64_t total = 0;

    bool operator==(const PresenceSnapshot&) const = default;
};

PresenceSnapshot presence_of(const std::map<MemberId, MemberStatus>& roster_states);

// ---------------------------------------------------------------------------
// Authentication and audit

struct ApiKey {
    std::string key_id;
    /// "<salt-hex>$<digest-hex>"; the raw key is never stored.
    std::string secret_hash;
    std::string label;
    bool enabled = true;

    bool operator==(const ApiKey&) const = default;
};

enum class Outcome { success, error };

struct AuditEvent {
    Timestamp ts{};
    std::string actor = "system";
    std::string action;
    std::map<std::string, std::string> params;
    Outcome outcome = Outcome::success;
    std::string detail;

    bool operator==(const AuditEvent&) const = default;
};

/// Param keys containing "token", "key" or "secret" (case-insensitive).
bool is_sensitive_param(std::string_view key);

/// Copy of params with sensitive values replaced by "[REDACTED]".
std::map<std::string, std::string> redact_params(const std::map<std::string, std::string>& params);

/// Receives audit events. Implementations must not throw.
class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual void append(AuditEvent event) = 0;
};

}  // namespace classbot
