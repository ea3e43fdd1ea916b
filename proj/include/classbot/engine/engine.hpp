#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "classbot/core/time.hpp"
#include "classbot/core/types.hpp"
#include "classbot/engine/command.hpp"
#include "classbot/gateway/chat.hpp"

namespace classbot::engine {

/// Receives closed sessions for durable export. Throws Error{io}.
class ExportSink {
public:
    virtual ~ExportSink() = default;
    virtual std::string export_attendance(const AttendanceSession& session) = 0;
    virtual std::string export_survey(const SurveyDefinition& survey, const std::vector<SurveyResponse>& responses) = 0;
};

struct AttendanceSummary {
    std::string session_id;
    std::string group_id;
    SessionState state = SessionState::open;
    std::size_t present_count = 0;
    std::size_t roster_size = 0;
    Timestamp opened_at{};
    std::optional<Timestamp> closed_at;
    std::string csv_path;

    nlohmann::json to_json() const;
};

struct EngineOptions {
    std::chrono::minutes dialog_timeout{15};
    Millis tally_edit_interval{1000};
    /// Seeds the generator for instructor-omitted attendance codes.
    std::uint64_t code_seed = 0x5eed;
};

/// The chat-side state machines for one bot instance: attendance, simple
/// and complex surveys, feedback, and utility commands.
///
/// Not thread-safe. Exactly one thread drives an engine (EngineRunner in the
/// server, the scenario loop in simulations), so replaying the same
/// commands and events yields the same state.
class InteractionEngine {
public:
    InteractionEngine(std::string bot_id, gateway::ChatGateway& gateway, Clock& clock, AuditSink& audit,
                      ExportSink* exports = nullptr, EngineOptions options = {});

    /// Must be called exactly once before any command; throws conflict on a
    /// second call.
    void initialize(EngineContext context, std::vector<Group> groups);
    bool initialized() const { return initialized_; }
    const std::string& bot_id() const { return bot_id_; }
    const EngineContext& context() const { return context_; }

    CommandResult execute(const Command& command);

    /// Handles one platform event and returns the actions it emitted.
    std::vector<gateway::ChatAction> on_event(const gateway::ChatEvent& event);

    /// Closes the open session of a group. Throws Error{not_found}.
    AttendanceSummary close_attendance(const std::string& group_id, const std::string& actor = "system");

    /// Closes every open survey whose duration has elapsed at `now`, in
    /// creation order; returns their ids.
    std::vector<std::string> survey_timeout_sweep(Timestamp now);

    /// Periodic housekeeping: timeout sweep, throttled tally edits, expiry
    /// of idle survey dialogs. Returns true if any state changed.
    bool tick(Timestamp now);

    // Read-only queries. Unknown ids throw Error{not_found}.
    AttendanceSummary attendance_summary(const std::string& session_id) const;
    std::vector<AttendanceSummary> attendance_sessions() const;
    const AttendanceSession& attendance_session(const std::string& session_id) const;
    bool has_attendance(const std::string& session_id) const;
    bool has_survey(const std::string& survey_id) const;
    bool has_feedback(const std::string& feedback_id) const;
    const SurveyDefinition& survey(const std::string& survey_id) const;
    std::vector<SurveyResponse> survey_responses(const std::string& survey_id) const;
    nlohmann::json survey_results(const std::string& survey_id) const;
    nlohmann::json survey_list() const;
    const FeedbackSession& feedback(const std::string& feedback_id) const;
    nlohmann::json feedback_results(const std::string& feedback_id) const;
    const std::map<std::string, Group>& groups() const { return groups_; }

    /// Complete engine state, deterministic for a deterministic run.
    nlohmann::json snapshot() const;
    /// Replaces state with a snapshot produced by snapshot().
    void restore(const nlohmann::json& state);

private:
    struct AttendanceRecord {
        AttendanceSession session;
        gateway::MessageRef prompt_ref = 0;
        std::string csv_path;
    };
    struct SurveyRecord {
        SurveyDefinition def;
        gateway::MessageRef message_ref = 0;
        std::vector<SurveyResponse> responses;
        std::set<MemberId> completed;
        bool tally_pending = false;
        std::optional<Timestamp> last_tally_edit;
        std::string csv_path;
    };
    struct FeedbackRecord {
        FeedbackSession session;
        gateway::MessageRef message_ref = 0;
    };
    struct Dialog {
        std::string survey_id;
        int next_question = 0;
        gateway::MessageRef question_ref = 0;
        Timestamp last_activity{};
    };
    struct CommentWindow {
        std::string feedback_id;
        Timestamp opened{};
    };
    enum class OwnerKind { attendance_prompt, survey, feedback };
    struct Owner {
        OwnerKind kind;
        std::string id;
    };

    CommandResult run(const CommandBody& body, const std::string& actor);
    CommandResult start_attendance(const StartAttendance& cmd);
    CommandResult create_survey(SurveyDefinition def, SurveyKind kind);
    CommandResult close_survey_command(const std::string& survey_id);
    CommandResult start_feedback(const StartFeedback& cmd);
    CommandResult close_feedback(const std::string& feedback_id);
    CommandResult ping();
    CommandResult send_greeting(const SendGreeting& cmd);
    CommandResult give_role(const GiveRole& cmd);
    CommandResult clear_messages(const ClearMessages& cmd);

    void handle_dm(const gateway::DirectMessage& dm, std::vector<gateway::ChatAction>& out);
    void handle_click(const gateway::ButtonClick& click, std::vector<gateway::ChatAction>& out);
    void handle_checkin(const gateway::DirectMessage& dm, const std::string& code,
                        std::vector<gateway::ChatAction>& out);
    bool handle_dialog_answer(const MemberId& member, const ResponseValue* value, const std::string& raw,
                              Timestamp at, std::vector<gateway::ChatAction>& out);
    void handle_simple_click(SurveyRecord& rec, const gateway::ButtonClick& click,
                             std::vector<gateway::ChatAction>& out);
    void handle_participate(SurveyRecord& rec, const gateway::ButtonClick& click,
                            std::vector<gateway::ChatAction>& out);
    void handle_feedback_click(FeedbackRecord& rec, const gateway::ButtonClick& click,
                               std::vector<gateway::ChatAction>& out);

    void close_survey(SurveyRecord& rec, Timestamp now);
    void record_response(SurveyRecord& rec, SurveyResponse response);
    void send_question(SurveyRecord& rec, const MemberId& member, Dialog& dialog,
                       std::vector<gateway::ChatAction>& out);
    bool flush_tally(SurveyRecord& rec, Timestamp now, std::vector<gateway::ChatAction>* out);
    bool expire_dialogs(Timestamp now);

    /// Submits under the admin context; errors propagate (command path).
    gateway::ActionAck submit(const gateway::ChatAction& action, std::vector<gateway::ChatAction>* out = nullptr);
    /// Submits on the event path; failures are audited, not thrown.
    std::optional<gateway::ActionAck> submit_quietly(const gateway::ChatAction& action,
                                                     std::vector<gateway::ChatAction>& out);
    void reply(const MemberId& member, std::string text, std::vector<gateway::ChatAction>& out);

    void audit(std::string actor, std::string action, std::map<std::string, std::string> params, Outcome outcome,
               std::string detail);

    const Group& group_or_throw(const std::string& group_id) const;
    std::size_t roster_size(const Group& group) const;
    AttendanceSummary summarize(const AttendanceRecord& rec) const;
    SurveyRecord& survey_record(const std::string& survey_id);
    const SurveyRecord& survey_record(const std::string& survey_id) const;
    FeedbackRecord& feedback_record(const std::string& feedback_id);
    const FeedbackRecord& feedback_record(const std::string& feedback_id) const;
    std::string next_id(const char* kind);
    std::string tally_text(const SurveyRecord& rec) const;

    std::string bot_id_;
    gateway::ChatGateway& gateway_;
    Clock& clock_;
    AuditSink& audit_;
    ExportSink* exports_;
    EngineOptions options_;

    bool initialized_ = false;
    EngineContext context_;
    std::map<std::string, Group> groups_;
    std::mt19937_64 code_rng_;
    std::map<std::string, std::uint64_t> counters_;

    std::vector<AttendanceRecord> attendance_;
    std::map<std::string, std::size_t> open_attendance_;
    std::vector<SurveyRecord> surveys_;
    std::vector<FeedbackRecord> feedback_;
    std::map<gateway::MessageRef, Owner> owners_;
    std::map<MemberId, Dialog> dialogs_;
    std::map<MemberId, CommentWindow> comment_windows_;
};

}  // namespace classbot::engine
