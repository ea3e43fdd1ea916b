#include "classbot/engine/engine.hpp"

#include <algorithm>
#include <cstdio>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"

namespace classbot::engine {

using gateway::ActionAck;
using gateway::Button;
using gateway::ChatAction;
using gateway::MessageRef;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::vector<Button> level_buttons(const std::vector<std::string>& labels) {
    std::vector<Button> buttons;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        buttons.push_back({"level-" + std::to_string(i + 1), labels[i]});
    }
    return buttons;
}

/// "level-3" -> 3; 0 when not a level button.
int level_from_button(const std::string& id) {
    if (id.size() == 7 && id.rfind("level-", 0) == 0 && id[6] >= '1' && id[6] <= '5') {
        return id[6] - '0';
    }
    return 0;
}

std::string histogram_line(const Histogram& h) {
    std::string out;
    for (std::size_t i = 0; i < h.buckets.size(); ++i) {
        if (i > 0) {
            out += " | ";
        }
        out += h.buckets[i].label + ": " + std::to_string(h.buckets[i].count);
    }
    return out;
}

std::string answer_hint(const Question& q) {
    switch (q.response_type) {
        case ResponseType::five_level: {
            std::string hint = "Reply with a number from 1 to 5 (";
            for (std::size_t i = 0; i < q.options.size(); ++i) {
                hint += (i ? ", " : "") + std::to_string(i + 1) + " = " + q.options[i];
            }
            return hint + ").";
        }
        case ResponseType::percentage: return "Reply with a percentage from 0 to 100.";
        case ResponseType::free_text: return "Reply with your answer in your own words.";
    }
    return {};
}

}  // namespace

nlohmann::json AttendanceSummary::to_json() const {
    nlohmann::json j{{"session_id", session_id},
                     {"group_id", group_id},
                     {"state", state},
                     {"present_count", present_count},
                     {"roster_size", roster_size},
                     {"opened_at", format_iso8601(opened_at)},
                     {"closed_at", closed_at ? nlohmann::json(format_iso8601(*closed_at)) : nlohmann::json(nullptr)}};
    if (!csv_path.empty()) {
        j["csv_path"] = csv_path;
    }
    return j;
}

InteractionEngine::InteractionEngine(std::string bot_id, gateway::ChatGateway& gateway, Clock& clock,
                                     AuditSink& audit, ExportSink* exports, EngineOptions options)
    : bot_id_(std::move(bot_id)),
      gateway_(gateway),
      clock_(clock),
      audit_(audit),
      exports_(exports),
      options_(options),
      code_rng_(options.code_seed) {}

void InteractionEngine::initialize(EngineContext context, std::vector<Group> groups) {
    if (initialized_) {
        throw Error(ErrorKind::conflict, "engine for " + bot_id_ + " is already initialized");
    }
    context_ = std::move(context);
    for (auto& g : groups) {
        if (g.id.empty()) {
            throw Error(ErrorKind::invalid_input, "group id must be non-empty");
        }
        const std::string id = g.id;
        if (!groups_.emplace(id, std::move(g)).second) {
            throw Error(ErrorKind::invalid_input, "duplicate group id '" + id + "'");
        }
    }
    initialized_ = true;
}

// ---------------------------------------------------------------------------
// Commands

CommandResult InteractionEngine::execute(const Command& command) {
    std::map<std::string, std::string> params;
    std::visit(overloaded{
                   [&](const StartAttendance& c) {
                       params["group"] = c.group_id;
                       params["code"] = c.code.value_or("");
                   },
                   [&](const StopAttendance& c) { params["group"] = c.group_id; },
                   [&](const CreateSimpleSurvey& c) { params["channel"] = c.def.channel_id; },
                   [&](const CreateComplexSurvey& c) {
                       params["channel"] = c.def.channel_id;
                       params["questions"] = std::to_string(c.def.questions.size());
                   },
                   [&](const CloseSurvey& c) { params["survey_id"] = c.survey_id; },
                   [&](const StartFeedback& c) {
                       params["channel"] = c.channel_id;
                       params["label"] = c.label;
                   },
                   [&](const CloseFeedback& c) { params["feedback_id"] = c.feedback_id; },
                   [&](const Ping&) {},
                   [&](const SendGreeting& c) { params["member"] = c.member_id; },
                   [&](const GiveRole& c) {
                       params["member"] = c.member_id;
                       params["role"] = c.role_id;
                   },
                   [&](const ClearMessages& c) {
                       params["channel"] = c.channel_id;
                       params["count"] = std::to_string(c.count);
                   },
               },
               command.body);
    params["bot"] = bot_id_;

    CommandResult result;
    try {
        if (!initialized_) {
            throw Error(ErrorKind::internal, "engine for " + bot_id_ + " is not initialized");
        }
        result = run(command.body, command.actor);
    } catch (const Error& e) {
        result = CommandResult::failure(e.kind(), e.what());
    } catch (const std::exception& e) {
        result = CommandResult::failure(ErrorKind::internal, e.what());
    }
    audit(command.actor, "command." + std::string(command_name(command.body)), std::move(params),
          result.ok() ? Outcome::success : Outcome::error, result.message);
    return result;
}

CommandResult InteractionEngine::run(const CommandBody& body, const std::string& actor) {
    return std::visit(
        overloaded{
            [&](const StartAttendance& c) { return start_attendance(c); },
            [&](const StopAttendance& c) {
                const AttendanceSummary s = close_attendance(c.group_id, actor);
                return CommandResult::success("Attendance command executed: session " + s.session_id +
                                                  " closed with " + std::to_string(s.present_count) + " present",
                                              s.to_json());
            },
            [&](const CreateSimpleSurvey& c) { return create_survey(c.def, SurveyKind::simple); },
            [&](const CreateComplexSurvey& c) { return create_survey(c.def, SurveyKind::complex); },
            [&](const CloseSurvey& c) { return close_survey_command(c.survey_id); },
            [&](const StartFeedback& c) { return start_feedback(c); },
            [&](const CloseFeedback& c) { return close_feedback(c.feedback_id); },
            [&](const Ping&) { return ping(); },
            [&](const SendGreeting& c) { return send_greeting(c); },
            [&](const GiveRole& c) { return give_role(c); },
            [&](const ClearMessages& c) { return clear_messages(c); },
        },
        body);
}

CommandResult InteractionEngine::start_attendance(const StartAttendance& cmd) {
    const Group& group = group_or_throw(cmd.group_id);
    std::string code;
    if (cmd.code) {
        if (!validate_attendance_code(*cmd.code)) {
            throw Error(ErrorKind::invalid_input, "attendance code must be exactly 4 digits");
        }
        code = *cmd.code;
    } else {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%04u", static_cast<unsigned>(code_rng_() % 10000));
        code = buf;
    }
    if (auto it = open_attendance_.find(group.id); it != open_attendance_.end()) {
        throw Error(ErrorKind::conflict, "attendance is already open for group " + group.id + " (session " +
                                             attendance_[it->second].session.id + ")");
    }
    const ActionAck ack = submit(gateway::PostMessage{
        group.channel_id,
        "Attendance check for group " + group.id + " is open. Send the attendance code to this bot in a direct message.",
        {}});

    AttendanceRecord rec;
    rec.session.id = next_id("att");
    rec.session.group_id = group.id;
    rec.session.code = code;
    rec.session.state = SessionState::open;
    rec.session.opened_at = clock_.now();
    rec.prompt_ref = ack.message_ref.value_or(0);
    owners_[rec.prompt_ref] = {OwnerKind::attendance_prompt, rec.session.id};
    open_attendance_[group.id] = attendance_.size();
    const std::string id = rec.session.id;
    attendance_.push_back(std::move(rec));
    return CommandResult::success(
        "Attendance command executed: session " + id + " open for group " + group.id,
        {{"session_id", id}, {"group_id", group.id}, {"code", code}, {"message_ref", ack.message_ref.value_or(0)}});
}

AttendanceSummary InteractionEngine::close_attendance(const std::string& group_id, const std::string& actor) {
    (void)actor;
    auto it = open_attendance_.find(group_id);
    if (it == open_attendance_.end()) {
        throw Error(ErrorKind::not_found, "no open attendance session for group " + group_id);
    }
    AttendanceRecord& rec = attendance_[it->second];
    rec.session.close(clock_.now());
    open_attendance_.erase(it);

    std::vector<ChatAction> ignored;
    submit_quietly(gateway::EditMessage{rec.prompt_ref,
                                        "Attendance check for group " + group_id + " is closed (" +
                                            std::to_string(rec.session.present_count()) + " present).",
                                        {}},
                   ignored);
    if (exports_ != nullptr) {
        try {
            rec.csv_path = exports_->export_attendance(rec.session);
        } catch (const std::exception& e) {
            audit("system", "export.attendance", {{"session_id", rec.session.id}}, Outcome::error, e.what());
        }
    }
    return summarize(rec);
}

CommandResult InteractionEngine::create_survey(SurveyDefinition def, SurveyKind kind) {
    def.kind = kind;
    if (def.channel_id.empty()) {
        auto it = context_.default_channels.find("surveys");
        if (it == context_.default_channels.end()) {
            throw Error(ErrorKind::invalid_input, "no channel given and no default survey channel configured");
        }
        def.channel_id = it->second;
    }
    if (kind == SurveyKind::simple && def.title.empty() && !def.questions.empty()) {
        def.title = def.questions.front().prompt;
    }
    if (kind == SurveyKind::complex && def.title.empty()) {
        throw Error(ErrorKind::invalid_input, "a complex survey needs a title");
    }
    def.state = SurveyState::draft;
    def.validate();

    SurveyRecord rec;
    rec.def = std::move(def);
    gateway::PostMessage post;
    post.channel_id = rec.def.channel_id;
    if (kind == SurveyKind::simple) {
        post.text = tally_text(rec);
        post.buttons = level_buttons(rec.def.questions.front().options);
    } else {
        post.text = rec.def.title + "\n" + std::to_string(rec.def.questions.size()) +
                    " questions. Click Participate to answer them in a direct message.";
        post.buttons = {{"participate", "Participate"}};
    }
    const ActionAck ack = submit(post);

    rec.def.id = next_id("srv");
    rec.def.state = SurveyState::open;
    rec.def.opened_at = clock_.now();
    rec.message_ref = ack.message_ref.value_or(0);
    rec.last_tally_edit = rec.def.opened_at;
    owners_[rec.message_ref] = {OwnerKind::survey, rec.def.id};
    const std::string id = rec.def.id;
    surveys_.push_back(std::move(rec));
    return CommandResult::success("Survey " + id + " is open",
                                  {{"survey_id", id}, {"message_ref", ack.message_ref.value_or(0)}});
}

CommandResult InteractionEngine::close_survey_command(const std::string& survey_id) {
    SurveyRecord& rec = survey_record(survey_id);
    if (rec.def.state != SurveyState::open) {
        throw Error(ErrorKind::conflict, "survey " + survey_id + " is not open");
    }
    close_survey(rec, clock_.now());
    nlohmann::json payload{{"survey_id", survey_id}, {"responses", rec.responses.size()}};
    if (!rec.csv_path.empty()) {
        payload["csv_path"] = rec.csv_path;
    }
    return CommandResult::success("Survey " + survey_id + " closed", std::move(payload));
}

CommandResult InteractionEngine::start_feedback(const StartFeedback& cmd) {
    if (cmd.label.empty()) {
        throw Error(ErrorKind::invalid_input, "feedback needs a label");
    }
    ChannelId channel = cmd.channel_id;
    if (channel.empty()) {
        auto it = context_.default_channels.find("feedback");
        if (it == context_.default_channels.end()) {
            throw Error(ErrorKind::invalid_input, "no channel given and no default feedback channel configured");
        }
        channel = it->second;
    }
    const ActionAck ack = submit(gateway::PostMessage{
        channel, "How satisfied are you with " + cmd.label + "?", level_buttons(satisfaction_labels())});
    FeedbackRecord rec;
    rec.session.id = next_id("fb");
    rec.session.channel_id = channel;
    rec.session.label = cmd.label;
    rec.session.state = SessionState::open;
    rec.session.opened_at = clock_.now();
    rec.message_ref = ack.message_ref.value_or(0);
    owners_[rec.message_ref] = {OwnerKind::feedback, rec.session.id};
    const std::string id = rec.session.id;
    feedback_.push_back(std::move(rec));
    return CommandResult::success("Feedback " + id + " is open",
                                  {{"feedback_id", id}, {"message_ref", ack.message_ref.value_or(0)}});
}

CommandResult InteractionEngine::close_feedback(const std::string& feedback_id) {
    FeedbackRecord& rec = feedback_record(feedback_id);
    if (rec.session.state != SessionState::open) {
        throw Error(ErrorKind::conflict, "feedback " + feedback_id + " is not open");
    }
    rec.session.state = SessionState::closed;
    rec.session.closed_at = clock_.now();
    for (auto it = comment_windows_.begin(); it != comment_windows_.end();) {
        it = it->second.feedback_id == feedback_id ? comment_windows_.erase(it) : std::next(it);
    }
    const Histogram h = aggregate_feedback(rec.session);
    std::vector<ChatAction> ignored;
    submit_quietly(gateway::EditMessage{rec.message_ref,
                                        "Feedback on " + rec.session.label + " is closed. " + histogram_line(h),
                                        {}},
                   ignored);
    return CommandResult::success("Feedback " + feedback_id + " closed",
                                  {{"feedback_id", feedback_id}, {"responses", h.total}});
}

CommandResult InteractionEngine::ping() {
    const auto t0 = clock_.monotonic();
    const ActionAck ack = submit(gateway::QueryPresence{});
    const double ms = static_cast<double>((clock_.monotonic() - t0).count()) / 1000.0;
    char text[64];
    std::snprintf(text, sizeof text, "Pong! Gateway round-trip %.1f ms", ms);
    nlohmann::json payload{{"latency_ms", ms}};
    if (ack.presence) {
        payload["presence"] = *ack.presence;
    }
    return CommandResult::success(text, std::move(payload));
}

CommandResult InteractionEngine::send_greeting(const SendGreeting& cmd) {
    if (cmd.text.empty()) {
        throw Error(ErrorKind::invalid_input, "message text is empty");
    }
    const ActionAck ack = submit(gateway::SendDM{cmd.member_id, cmd.text, {}});
    return CommandResult::success("Message sent to " + cmd.member_id,
                                  {{"member_id", cmd.member_id}, {"message_ref", ack.message_ref.value_or(0)}});
}

CommandResult InteractionEngine::give_role(const GiveRole& cmd) {
    submit(gateway::AssignRole{cmd.member_id, cmd.role_id});
    return CommandResult::success("Role " + cmd.role_id + " assigned to " + cmd.member_id,
                                  {{"member_id", cmd.member_id}, {"role_id", cmd.role_id}});
}

CommandResult InteractionEngine::clear_messages(const ClearMessages& cmd) {
    if (cmd.count < 1) {
        throw Error(ErrorKind::invalid_input, "count must be at least 1");
    }
    const ActionAck ack = submit(gateway::DeleteMessages{cmd.channel_id, cmd.count});
    const int deleted = ack.deleted.value_or(0);
    return CommandResult::success("Deleted " + std::to_string(deleted) + " messages from " + cmd.channel_id,
                                  {{"channel_id", cmd.channel_id}, {"deleted", deleted}});
}

// ---------------------------------------------------------------------------
// Events

std::vector<ChatAction> InteractionEngine::on_event(const gateway::ChatEvent& event) {
    std::vector<ChatAction> out;
    if (!initialized_) {
        return out;
    }
    std::visit(overloaded{
                   [&](const gateway::DirectMessage& dm) { handle_dm(dm, out); },
                   [&](const gateway::ButtonClick& click) { handle_click(click, out); },
                   [](const gateway::ChannelMessage&) {},
                   [](const gateway::PresenceReport&) {},
                   [](const gateway::MemberStateChange&) {},
               },
               event);
    return out;
}

void InteractionEngine::handle_dm(const gateway::DirectMessage& dm, std::vector<ChatAction>& out) {
    const Timestamp now = std::max(dm.at, clock_.now());
    if (auto it = dialogs_.find(dm.member_id); it != dialogs_.end()) {
        if (now - it->second.last_activity > options_.dialog_timeout) {
            dialogs_.erase(it);
        } else {
            handle_dialog_answer(dm.member_id, nullptr, dm.text, dm.at, out);
            return;
        }
    }
    const std::string body = normalize_free_text(dm.text);
    if (validate_attendance_code(body)) {
        handle_checkin(dm, body, out);
        return;
    }
    if (auto it = comment_windows_.find(dm.member_id); it != comment_windows_.end()) {
        const CommentWindow window = it->second;
        comment_windows_.erase(it);
        if (now - window.opened <= options_.dialog_timeout) {
            FeedbackRecord& rec = feedback_record(window.feedback_id);
            for (auto& r : rec.session.responses) {
                if (r.student_id == dm.member_id) {
                    r.comment = dm.text;
                }
            }
            audit("system", "feedback.comment", {{"feedback_id", window.feedback_id}, {"member", dm.member_id}},
                  Outcome::success, "");
            reply(dm.member_id, "Thanks, your comment was recorded.", out);
            return;
        }
    }
    for (const auto& [group_id, idx] : open_attendance_) {
        if (groups_.at(group_id).admits(dm.member_id)) {
            audit("system", "attendance.rejected", {{"member", dm.member_id}, {"group", group_id}}, Outcome::error,
                  "not an attendance code");
            reply(dm.member_id, "That is not a valid attendance code. Please send the 4-digit code.", out);
            return;
        }
    }
    audit("system", "event.ignored", {{"member", dm.member_id}, {"event", "direct_message"}}, Outcome::success,
          "no open interaction for this message");
}

void InteractionEngine::handle_checkin(const gateway::DirectMessage& dm, const std::string& code,
                                       std::vector<ChatAction>& out) {
    if (open_attendance_.empty()) {
        audit("system", "attendance.rejected", {{"member", dm.member_id}}, Outcome::error, "no open session");
        reply(dm.member_id, "No attendance check is open right now.", out);
        return;
    }
    bool member_has_session = false;
    const AttendanceRecord* code_owner = nullptr;
    for (const auto& [group_id, idx] : open_attendance_) {
        AttendanceRecord& rec = attendance_[idx];
        const Group& group = groups_.at(group_id);
        const bool admitted = group.admits(dm.member_id);
        member_has_session = member_has_session || admitted;
        if (rec.session.code != code) {
            continue;
        }
        if (!admitted) {
            code_owner = &rec;
            continue;
        }
        const auto info = gateway_.lookup_member(dm.member_id);
        CheckIn checkin{dm.member_id, info ? info->display_name : dm.member_id,
                        std::max(dm.at, rec.session.opened_at)};
        if (rec.session.add_checkin(std::move(checkin))) {
            audit("system", "attendance.checkin", {{"session_id", rec.session.id}, {"member", dm.member_id}},
                  Outcome::success, "");
            reply(dm.member_id, "You are checked in for group " + group_id + ". Thank you!", out);
        } else {
            audit("system", "attendance.duplicate", {{"session_id", rec.session.id}, {"member", dm.member_id}},
                  Outcome::success, "already checked in");
            reply(dm.member_id, "You are already checked in for group " + group_id + ".", out);
        }
        return;
    }
    if (code_owner != nullptr) {
        audit("system", "attendance.rejected",
              {{"session_id", code_owner->session.id}, {"member", dm.member_id}}, Outcome::error, "not on roster");
        reply(dm.member_id, "You are not on the roster for group " + code_owner->session.group_id + ".", out);
        return;
    }
    audit("system", "attendance.rejected", {{"member", dm.member_id}}, Outcome::error,
          member_has_session ? "wrong code" : "no session for member");
    reply(dm.member_id,
          member_has_session ? "Sorry, that code does not match the open attendance check. Please try again."
                             : "No attendance check is open for your group.",
          out);
}

bool InteractionEngine::handle_dialog_answer(const MemberId& member, const ResponseValue* value,
                                             const std::string& raw, Timestamp at, std::vector<ChatAction>& out) {
    auto it = dialogs_.find(member);
    if (it == dialogs_.end()) {
        return false;
    }
    Dialog& dialog = it->second;
    SurveyRecord& rec = survey_record(dialog.survey_id);
    const Question& q = rec.def.questions.at(static_cast<std::size_t>(dialog.next_question));
    std::optional<ResponseValue> parsed;
    if (value != nullptr) {
        parsed = *value;
    } else {
        parsed = parse_answer(raw, q);
    }
    dialog.last_activity = std::max(at, clock_.now());
    if (!parsed) {
        reply(member, "Sorry, I could not read that answer. " + answer_hint(q), out);
        return true;
    }
    record_response(rec, SurveyResponse{rec.def.id, q.index, member, *parsed, std::max(at, *rec.def.opened_at)});
    ++dialog.next_question;
    if (dialog.next_question < static_cast<int>(rec.def.questions.size())) {
        send_question(rec, member, dialog, out);
        return true;
    }
    rec.completed.insert(member);
    const std::string title = rec.def.title;
    dialogs_.erase(it);
    reply(member, "Thank you! Your answers to \"" + title + "\" were recorded.", out);
    return true;
}

void InteractionEngine::handle_click(const gateway::ButtonClick& click, std::vector<ChatAction>& out) {
    if (auto d = dialogs_.find(click.member_id);
        d != dialogs_.end() && d->second.question_ref == click.message_ref) {
        if (const int level = level_from_button(click.button_id); level > 0) {
            const ResponseValue value = Level{level};
            const SurveyRecord& rec = survey_record(d->second.survey_id);
            const Question& q = rec.def.questions.at(static_cast<std::size_t>(d->second.next_question));
            if (q.response_type == ResponseType::five_level) {
                handle_dialog_answer(click.member_id, &value, {}, click.at, out);
                return;
            }
        }
    }
    auto owner = owners_.find(click.message_ref);
    if (owner == owners_.end()) {
        audit("system", "event.ignored",
              {{"member", click.member_id}, {"message_ref", std::to_string(click.message_ref)}}, Outcome::success,
              "click on an unknown message");
        return;
    }
    switch (owner->second.kind) {
        case OwnerKind::survey: {
            SurveyRecord& rec = survey_record(owner->second.id);
            if (rec.def.kind == SurveyKind::simple) {
                handle_simple_click(rec, click, out);
            } else {
                handle_participate(rec, click, out);
            }
            return;
        }
        case OwnerKind::feedback: handle_feedback_click(feedback_record(owner->second.id), click, out); return;
        case OwnerKind::attendance_prompt:
            audit("system", "event.ignored", {{"member", click.member_id}}, Outcome::success,
                  "attendance prompts have no buttons");
            return;
    }
}

void InteractionEngine::handle_simple_click(SurveyRecord& rec, const gateway::ButtonClick& click,
                                            std::vector<ChatAction>& out) {
    const int level = level_from_button(click.button_id);
    if (rec.def.state != SurveyState::open || level == 0) {
        audit("system", "event.ignored", {{"survey_id", rec.def.id}, {"member", click.member_id}}, Outcome::success,
              rec.def.state != SurveyState::open ? "survey is closed" : "unknown button");
        return;
    }
    record_response(rec, SurveyResponse{rec.def.id, 0, click.member_id, Level{level},
                                        std::max(click.at, *rec.def.opened_at)});
    rec.tally_pending = true;
    flush_tally(rec, std::max(click.at, clock_.now()), &out);
}

void InteractionEngine::handle_participate(SurveyRecord& rec, const gateway::ButtonClick& click,
                                           std::vector<ChatAction>& out) {
    if (rec.def.state != SurveyState::open || click.button_id != "participate") {
        audit("system", "event.ignored", {{"survey_id", rec.def.id}, {"member", click.member_id}}, Outcome::success,
              rec.def.state != SurveyState::open ? "survey is closed" : "unknown button");
        return;
    }
    if (rec.completed.contains(click.member_id)) {
        reply(click.member_id, "You have already completed \"" + rec.def.title + "\".", out);
        return;
    }
    const Timestamp now = std::max(click.at, clock_.now());
    auto it = dialogs_.find(click.member_id);
    if (it != dialogs_.end() && it->second.survey_id == rec.def.id &&
        now - it->second.last_activity <= options_.dialog_timeout) {
        it->second.last_activity = now;
        send_question(rec, click.member_id, it->second, out);
        return;
    }
    Dialog& dialog = dialogs_[click.member_id];
    dialog = Dialog{rec.def.id, 0, 0, now};
    audit("system", "survey.participate", {{"survey_id", rec.def.id}, {"member", click.member_id}},
          Outcome::success, "");
    send_question(rec, click.member_id, dialog, out);
}

void InteractionEngine::handle_feedback_click(FeedbackRecord& rec, const gateway::ButtonClick& click,
                                              std::vector<ChatAction>& out) {
    const int level = level_from_button(click.button_id);
    if (rec.session.state != SessionState::open || level == 0) {
        audit("system", "event.ignored", {{"feedback_id", rec.session.id}, {"member", click.member_id}},
              Outcome::success, rec.session.state != SessionState::open ? "feedback is closed" : "unknown button");
        return;
    }
    const bool replaced = rec.session.record(
        FeedbackResponse{click.member_id, level, std::nullopt, std::max(click.at, rec.session.opened_at)});
    audit("system", replaced ? "feedback.response_overwritten" : "feedback.response",
          {{"feedback_id", rec.session.id}, {"member", click.member_id}, {"level", std::to_string(level)}},
          Outcome::success, "");
    comment_windows_[click.member_id] = {rec.session.id, std::max(click.at, clock_.now())};
    const Histogram h = aggregate_feedback(rec.session);
    reply(click.member_id,
          "Thanks for your feedback! Results so far (" + std::to_string(h.total) + " responses): " +
              histogram_line(h) + "\nReply with a comment if you like.",
          out);
}

void InteractionEngine::send_question(SurveyRecord& rec, const MemberId& member, Dialog& dialog,
                                      std::vector<ChatAction>& out) {
    const Question& q = rec.def.questions.at(static_cast<std::size_t>(dialog.next_question));
    gateway::SendDM dm{member,
                       "Question " + std::to_string(q.index + 1) + "/" + std::to_string(rec.def.questions.size()) +
                           ": " + q.prompt + "\n" + answer_hint(q),
                       {}};
    if (q.response_type == ResponseType::five_level) {
        dm.buttons = level_buttons(q.options);
    }
    if (auto ack = submit_quietly(dm, out)) {
        dialog.question_ref = ack->message_ref.value_or(0);
    }
}

void InteractionEngine::record_response(SurveyRecord& rec, SurveyResponse response) {
    const Question& q = rec.def.questions.at(static_cast<std::size_t>(response.question_index));
    check_response_value(response.value, q);
    std::map<std::string, std::string> params{{"survey_id", rec.def.id},
                                              {"question_index", std::to_string(response.question_index)},
                                              {"member", response.student_id},
                                              {"value", value_to_string(response.value)}};
    for (auto& existing : rec.responses) {
        if (existing.question_index == response.question_index && existing.student_id == response.student_id) {
            params["previous"] = value_to_string(existing.value);
            existing = std::move(response);
            audit("system", "survey.response_overwritten", std::move(params), Outcome::success, "last write wins");
            return;
        }
    }
    rec.responses.push_back(std::move(response));
    audit("system", "survey.response", std::move(params), Outcome::success, "");
}

bool InteractionEngine::flush_tally(SurveyRecord& rec, Timestamp now, std::vector<ChatAction>* out) {
    if (!rec.tally_pending || rec.def.state != SurveyState::open) {
        return false;
    }
    if (rec.last_tally_edit && now - *rec.last_tally_edit < options_.tally_edit_interval) {
        return false;
    }
    std::vector<ChatAction> local;
    submit_quietly(
        gateway::EditMessage{rec.message_ref, tally_text(rec), level_buttons(rec.def.questions.front().options)},
        out != nullptr ? *out : local);
    rec.tally_pending = false;
    rec.last_tally_edit = now;
    return true;
}

// ---------------------------------------------------------------------------
// Time-driven work

void InteractionEngine::close_survey(SurveyRecord& rec, Timestamp now) {
    rec.def.state = SurveyState::closed;
    rec.def.closed_at = std::max(now, rec.def.opened_at.value_or(now));
    rec.tally_pending = false;
    for (auto it = dialogs_.begin(); it != dialogs_.end();) {
        it = it->second.survey_id == rec.def.id ? dialogs_.erase(it) : std::next(it);
    }
    std::string text;
    if (rec.def.kind == SurveyKind::simple) {
        text = tally_text(rec) + "\nThis survey is closed.";
    } else {
        text = rec.def.title + "\nThis survey is closed (" + std::to_string(rec.completed.size()) +
               " completed).";
    }
    std::vector<ChatAction> ignored;
    submit_quietly(gateway::EditMessage{rec.message_ref, text, {}}, ignored);
    if (exports_ != nullptr) {
        try {
            rec.csv_path = exports_->export_survey(rec.def, rec.responses);
        } catch (const std::exception& e) {
            audit("system", "export.survey", {{"survey_id", rec.def.id}}, Outcome::error, e.what());
        }
    }
    audit("system", "survey.closed", {{"survey_id", rec.def.id}, {"responses", std::to_string(rec.responses.size())}},
          Outcome::success, "");
}

std::vector<std::string> InteractionEngine::survey_timeout_sweep(Timestamp now) {
    std::vector<std::string> closed;
    for (auto& rec : surveys_) {
        if (rec.def.state != SurveyState::open || !rec.def.duration || !rec.def.opened_at) {
            continue;
        }
        if (*rec.def.opened_at + *rec.def.duration <= now) {
            close_survey(rec, now);
            closed.push_back(rec.def.id);
        }
    }
    return closed;
}

bool InteractionEngine::expire_dialogs(Timestamp now) {
    const std::size_t before = dialogs_.size();
    for (auto it = dialogs_.begin(); it != dialogs_.end();) {
        it = now - it->second.last_activity > options_.dialog_timeout ? dialogs_.erase(it) : std::next(it);
    }
    for (auto it = comment_windows_.begin(); it != comment_windows_.end();) {
        it = now - it->second.opened > options_.dialog_timeout ? comment_windows_.erase(it) : std::next(it);
    }
    return dialogs_.size() != before;
}

bool InteractionEngine::tick(Timestamp now) {
    if (!initialized_) {
        return false;
    }
    bool changed = !survey_timeout_sweep(now).empty();
    for (auto& rec : surveys_) {
        changed = flush_tally(rec, now, nullptr) || changed;
    }
    return expire_dialogs(now) || changed;
}

// ---------------------------------------------------------------------------
// Helpers

ActionAck InteractionEngine::submit(const ChatAction& action, std::vector<ChatAction>* out) {
    ActionAck ack = gateway_.submit_action(action, gateway::ActingContext{bot_id_, context_.admin_role_id});
    if (out != nullptr) {
        out->push_back(action);
    }
    return ack;
}

std::optional<ActionAck> InteractionEngine::submit_quietly(const ChatAction& action, std::vector<ChatAction>& out) {
    try {
        return submit(action, &out);
    } catch (const std::exception& e) {
        audit("system", "gateway." + std::string(gateway::action_name(action)), {}, Outcome::error, e.what());
        return std::nullopt;
    }
}

void InteractionEngine::reply(const MemberId& member, std::string text, std::vector<ChatAction>& out) {
    submit_quietly(gateway::SendDM{member, std::move(text), {}}, out);
}

void InteractionEngine::audit(std::string actor, std::string action, std::map<std::string, std::string> params,
                              Outcome outcome, std::string detail) {
    params.emplace("bot", bot_id_);
    audit_.append(AuditEvent{clock_.now(), std::move(actor), std::move(action), std::move(params), outcome,
                             std::move(detail)});
}

const Group& InteractionEngine::group_or_throw(const std::string& group_id) const {
    auto it = groups_.find(group_id);
    if (it == groups_.end()) {
        throw Error(ErrorKind::not_found, "unknown group '" + group_id + "'");
    }
    return it->second;
}

std::size_t InteractionEngine::roster_size(const Group& group) const {
    return group.roster.empty() ? gateway_.members().size() : group.roster.size();
}

AttendanceSummary InteractionEngine::summarize(const AttendanceRecord& rec) const {
    const auto git = groups_.find(rec.session.group_id);
    return AttendanceSummary{rec.session.id,
                             rec.session.group_id,
                             rec.session.state,
                             rec.session.present_count(),
                             git == groups_.end() ? 0 : roster_size(git->second),
                             rec.session.opened_at,
                             rec.session.closed_at,
                             rec.csv_path};
}

std::string InteractionEngine::next_id(const char* kind) {
    return bot_id_ + "-" + kind + "-" + std::to_string(++counters_[kind]);
}

std::string InteractionEngine::tally_text(const SurveyRecord& rec) const {
    std::vector<SurveyResponse> responses;
    for (const auto& r : rec.responses) {
        if (r.question_index == 0) {
            responses.push_back(r);
        }
    }
    const Histogram h = aggregate_survey(responses, rec.def.questions.front());
    return rec.def.questions.front().prompt + "\n" + histogram_line(h) + " (" + std::to_string(h.total) +
           " responses)";
}

InteractionEngine::SurveyRecord& InteractionEngine::survey_record(const std::string& survey_id) {
    return const_cast<SurveyRecord&>(std::as_const(*this).survey_record(survey_id));
}

const InteractionEngine::SurveyRecord& InteractionEngine::survey_record(const std::string& survey_id) const {
    auto it = std::find_if(surveys_.begin(), surveys_.end(),
                           [&](const SurveyRecord& r) { return r.def.id == survey_id; });
    if (it == surveys_.end()) {
        throw Error(ErrorKind::not_found, "unknown id: survey " + survey_id);
    }
    return *it;
}

InteractionEngine::FeedbackRecord& InteractionEngine::feedback_record(const std::string& feedback_id) {
    return const_cast<FeedbackRecord&>(std::as_const(*this).feedback_record(feedback_id));
}

const InteractionEngine::FeedbackRecord& InteractionEngine::feedback_record(const std::string& feedback_id) const {
    auto it = std::find_if(feedback_.begin(), feedback_.end(),
                           [&](const FeedbackRecord& r) { return r.session.id == feedback_id; });
    if (it == feedback_.end()) {
        throw Error(ErrorKind::not_found, "unknown id: feedback " + feedback_id);
    }
    return *it;
}

// ---------------------------------------------------------------------------
// Queries

AttendanceSummary InteractionEngine::attendance_summary(const std::string& session_id) const {
    for (const auto& rec : attendance_) {
        if (rec.session.id == session_id) {
            return summarize(rec);
        }
    }
    throw Error(ErrorKind::not_found, "unknown id: attendance session " + session_id);
}

std::vector<AttendanceSummary> InteractionEngine::attendance_sessions() const {
    std::vector<AttendanceSummary> out;
    for (const auto& rec : attendance_) {
        out.push_back(summarize(rec));
    }
    return out;
}

const AttendanceSession& InteractionEngine::attendance_session(const std::string& session_id) const {
    for (const auto& rec : attendance_) {
        if (rec.session.id == session_id) {
            return rec.session;
        }
    }
    throw Error(ErrorKind::not_found, "unknown id: attendance session " + session_id);
}

bool InteractionEngine::has_attendance(const std::string& session_id) const {
    return std::any_of(attendance_.begin(), attendance_.end(),
                       [&](const AttendanceRecord& r) { return r.session.id == session_id; });
}

bool InteractionEngine::has_survey(const std::string& survey_id) const {
    return std::any_of(surveys_.begin(), surveys_.end(), [&](const SurveyRecord& r) { return r.def.id == survey_id; });
}

bool InteractionEngine::has_feedback(const std::string& feedback_id) const {
    return std::any_of(feedback_.begin(), feedback_.end(),
                       [&](const FeedbackRecord& r) { return r.session.id == feedback_id; });
}

const SurveyDefinition& InteractionEngine::survey(const std::string& survey_id) const {
    return survey_record(survey_id).def;
}

std::vector<SurveyResponse> InteractionEngine::survey_responses(const std::string& survey_id) const {
    return survey_record(survey_id).responses;
}

nlohmann::json InteractionEngine::survey_results(const std::string& survey_id) const {
    const SurveyRecord& rec = survey_record(survey_id);
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : rec.def.questions) {
        std::vector<SurveyResponse> answers;
        for (const auto& r : rec.responses) {
            if (r.question_index == q.index) {
                answers.push_back(r);
            }
        }
        questions.push_back({{"index", q.index},
                             {"prompt", q.prompt},
                             {"response_type", to_string(q.response_type)},
                             {"histogram", aggregate_survey(answers, q)}});
    }
    return {{"survey_id", rec.def.id},
            {"kind", rec.def.kind},
            {"title", rec.def.title},
            {"state", rec.def.state},
            {"participants_completed", rec.completed.size()},
            {"response_count", rec.responses.size()},
            {"questions", std::move(questions)}};
}

nlohmann::json InteractionEngine::survey_list() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& rec : surveys_) {
        out.push_back({{"survey_id", rec.def.id},
                       {"kind", rec.def.kind},
                       {"title", rec.def.title},
                       {"state", rec.def.state},
                       {"channel_id", rec.def.channel_id},
                       {"questions", rec.def.questions.size()},
                       {"response_count", rec.responses.size()}});
    }
    return out;
}

const FeedbackSession& InteractionEngine::feedback(const std::string& feedback_id) const {
    return feedback_record(feedback_id).session;
}

nlohmann::json InteractionEngine::feedback_results(const std::string& feedback_id) const {
    const FeedbackRecord& rec = feedback_record(feedback_id);
    nlohmann::json comments = nlohmann::json::array();
    for (const auto& r : rec.session.responses) {
        if (r.comment) {
            comments.push_back(*r.comment);
        }
    }
    return {{"feedback_id", rec.session.id},
            {"label", rec.session.label},
            {"state", rec.session.state},
            {"histogram", aggregate_feedback(rec.session)},
            {"comments", std::move(comments)}};
}

// ---------------------------------------------------------------------------
// Snapshot / restore

nlohmann::json InteractionEngine::snapshot() const {
    nlohmann::json attendance = nlohmann::json::array();
    for (const auto& rec : attendance_) {
        attendance.push_back({{"session", rec.session}, {"prompt_ref", rec.prompt_ref}, {"csv_path", rec.csv_path}});
    }
    nlohmann::json surveys = nlohmann::json::array();
    for (const auto& rec : surveys_) {
        surveys.push_back({{"definition", rec.def},
                           {"message_ref", rec.message_ref},
                           {"responses", rec.responses},
                           {"completed", rec.completed},
                           {"csv_path", rec.csv_path}});
    }
    nlohmann::json feedback = nlohmann::json::array();
    for (const auto& rec : feedback_) {
        feedback.push_back({{"session", rec.session}, {"message_ref", rec.message_ref}});
    }
    nlohmann::json dialogs = nlohmann::json::object();
    for (const auto& [member, d] : dialogs_) {
        dialogs[member] = {{"survey_id", d.survey_id},
                           {"next_question", d.next_question},
                           {"question_ref", d.question_ref},
                           {"last_activity", format_iso8601(d.last_activity)}};
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& [id, g] : groups_) {
        groups.push_back(g);
    }
    return {{"bot_id", bot_id_},         {"counters", counters_}, {"groups", std::move(groups)},
            {"attendance", std::move(attendance)}, {"surveys", std::move(surveys)},
            {"feedback", std::move(feedback)},     {"dialogs", std::move(dialogs)}};
}

void InteractionEngine::restore(const nlohmann::json& state) {
    attendance_.clear();
    open_attendance_.clear();
    surveys_.clear();
    feedback_.clear();
    owners_.clear();
    dialogs_.clear();
    comment_windows_.clear();
    counters_ = state.value("counters", std::map<std::string, std::uint64_t>{});
    if (state.contains("groups")) {
        groups_.clear();
        for (const auto& g : state.at("groups")) {
            Group group = g.get<Group>();
            groups_.emplace(group.id, std::move(group));
        }
    }
    for (const auto& a : state.value("attendance", nlohmann::json::array())) {
        AttendanceRecord rec{a.at("session").get<AttendanceSession>(), a.at("prompt_ref").get<MessageRef>(),
                             a.value("csv_path", std::string{})};
        owners_[rec.prompt_ref] = {OwnerKind::attendance_prompt, rec.session.id};
        if (rec.session.state == SessionState::open) {
            open_attendance_[rec.session.group_id] = attendance_.size();
        }
        attendance_.push_back(std::move(rec));
    }
    for (const auto& s : state.value("surveys", nlohmann::json::array())) {
        SurveyRecord rec;
        rec.def = s.at("definition").get<SurveyDefinition>();
        rec.message_ref = s.at("message_ref").get<MessageRef>();
        rec.responses = s.at("responses").get<std::vector<SurveyResponse>>();
        rec.completed = s.value("completed", std::set<MemberId>{});
        rec.csv_path = s.value("csv_path", std::string{});
        rec.last_tally_edit = rec.def.opened_at;
        owners_[rec.message_ref] = {OwnerKind::survey, rec.def.id};
        surveys_.push_back(std::move(rec));
    }
    for (const auto& f : state.value("feedback", nlohmann::json::array())) {
        FeedbackRecord rec{f.at("session").get<FeedbackSession>(), f.at("message_ref").get<MessageRef>()};
        owners_[rec.message_ref] = {OwnerKind::feedback, rec.session.id};
        feedback_.push_back(std::move(rec));
    }
    const nlohmann::json dialogs = state.value("dialogs", nlohmann::json::object());
    for (const auto& [member, d] : dialogs.items()) {
        dialogs_[member] = Dialog{d.at("survey_id").get<std::string>(), d.at("next_question").get<int>(),
                                  d.at("question_ref").get<MessageRef>(),
                                  parse_iso8601(d.at("last_activity").get<std::string>())};
    }
}

}  // namespace classbot::engine
