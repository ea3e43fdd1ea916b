#include "classbot/core/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "classbot/core/error.hpp"

namespace classbot {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::conflict: return "conflict";
        case ErrorKind::unavailable: return "unavailable";
        case ErrorKind::authentication: return "authentication";
        case ErrorKind::permission_denied: return "permission_denied";
        case ErrorKind::rate_limited: return "rate_limited";
        case ErrorKind::integrity: return "integrity";
        case ErrorKind::io: return "io";
        case ErrorKind::internal: return "internal";
    }
    return "internal";
}

bool is_valid_transition(BotState from, BotState to) {
    if (to == BotState::error) {
        return true;
    }
    switch (from) {
        case BotState::stopped: return to == BotState::starting;
        case BotState::starting: return to == BotState::running;
        case BotState::running: return to == BotState::stopped;
        case BotState::error: return to == BotState::stopped;
    }
    return false;
}

namespace {

std::string_view state_name(BotState s) {
    switch (s) {
        case BotState::stopped: return "stopped";
        case BotState::starting: return "starting";
        case BotState::running: return "running";
        case BotState::error: return "error";
    }
    return "?";
}

std::string_view trim(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!text.empty() && is_space(text.front())) {
        text.remove_prefix(1);
    }
    while (!text.empty() && is_space(text.back())) {
        text.remove_suffix(1);
    }
    return text;
}

std::optional<int> parse_int(std::string_view text) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

void BotInstance::transition_to(BotState next) {
    if (!is_valid_transition(state, next)) {
        throw Error(ErrorKind::invalid_input, "bot " + id + " cannot go from " + std::string(state_name(state)) +
                                                  " to " + std::string(state_name(next)));
    }
    state = next;
}

std::string token_ref_for(const std::string& bot_id) {
    return "bot-token:" + bot_id;
}

bool validate_attendance_code(std::string_view code) {
    return code.size() == 4 && std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool AttendanceSession::has_checked_in(const MemberId& student) const {
    return std::any_of(checkins.begin(), checkins.end(),
                       [&](const CheckIn& c) { return c.student_id == student; });
}

bool AttendanceSession::add_checkin(CheckIn checkin) {
    if (state != SessionState::open) {
        throw Error(ErrorKind::conflict, "attendance session " + id + " is closed");
    }
    if (checkin.student_id.empty()) {
        throw Error(ErrorKind::invalid_input, "check-in without a student id");
    }
    if (checkin.at < opened_at) {
        throw Error(ErrorKind::invalid_input, "check-in precedes session opening");
    }
    if (has_checked_in(checkin.student_id)) {
        return false;
    }
    checkins.push_back(std::move(checkin));
    return true;
}

void AttendanceSession::close(Timestamp at) {
    if (state == SessionState::closed) {
        throw Error(ErrorKind::conflict, "attendance session " + id + " is already closed");
    }
    state = SessionState::closed;
    closed_at = std::max(at, checkins.empty() ? opened_at : checkins.back().at);
}

const std::vector<std::string>& default_difficulty_labels() {
    static const std::vector<std::string> labels{"Very easy", "Easy", "Just right", "Difficult", "Very difficult"};
    return labels;
}

const std::vector<std::string>& satisfaction_labels() {
    static const std::vector<std::string> labels{"Very dissatisfied", "Dissatisfied", "Neutral", "Satisfied",
                                                 "Very satisfied"};
    return labels;
}

Question make_question(int index, std::string prompt, ResponseType type) {
    Question q{index, std::move(prompt), type, {}};
    if (type == ResponseType::five_level) {
        q.options = default_difficulty_labels();
    }
    return q;
}

void SurveyDefinition::validate() const {
    if (questions.empty()) {
        throw Error(ErrorKind::invalid_input, "survey needs at least one question");
    }
    if (kind == SurveyKind::simple) {
        if (questions.size() != 1) {
            throw Error(ErrorKind::invalid_input, "a simple survey has exactly one question");
        }
        if (questions.front().response_type != ResponseType::five_level) {
            throw Error(ErrorKind::invalid_input, "a simple survey question must be five_level");
        }
    }
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const Question& q = questions[i];
        if (q.index != static_cast<int>(i)) {
            throw Error(ErrorKind::invalid_input, "question indices must be contiguous from 0");
        }
        if (trim(q.prompt).empty()) {
            throw Error(ErrorKind::invalid_input, "question " + std::to_string(i) + " has an empty prompt");
        }
        if (q.response_type == ResponseType::five_level && q.options.size() != 5) {
            throw Error(ErrorKind::invalid_input, "five_level question " + std::to_string(i) + " needs 5 options");
        }
        if (q.response_type != ResponseType::five_level && !q.options.empty()) {
            throw Error(ErrorKind::invalid_input, "question " + std::to_string(i) + " takes no options");
        }
    }
    if (duration && duration->count() <= 0) {
        throw Error(ErrorKind::invalid_input, "duration must be positive");
    }
}

ResponseType response_type_of(const ResponseValue& value) {
    switch (value.index()) {
        case 0: return ResponseType::five_level;
        case 1: return ResponseType::percentage;
        default: return ResponseType::free_text;
    }
}

void check_response_value(const ResponseValue& value, const Question& question) {
    if (response_type_of(value) != question.response_type) {
        throw Error(ErrorKind::invalid_input,
                    "response type does not match question " + std::to_string(question.index));
    }
    if (const auto* level = std::get_if<Level>(&value); level && (level->value < 1 || level->value > 5)) {
        throw Error(ErrorKind::invalid_input, "level must be within 1..5");
    }
    if (const auto* pct = std::get_if<Percent>(&value); pct && (pct->value < 0 || pct->value > 100)) {
        throw Error(ErrorKind::invalid_input, "percentage must be within 0..100");
    }
}

std::optional<ResponseValue> parse_answer(std::string_view text, const Question& question) {
    const std::string_view body = trim(text);
    if (body.empty()) {
        return std::nullopt;
    }
    switch (question.response_type) {
        case ResponseType::five_level: {
            if (auto n = parse_int(body); n && *n >= 1 && *n <= 5) {
                return Level{*n};
            }
            const std::string wanted = normalize_free_text(body);
            for (std::size_t i = 0; i < question.options.size(); ++i) {
                if (normalize_free_text(question.options[i]) == wanted) {
                    return Level{static_cast<int>(i) + 1};
                }
            }
            return std::nullopt;
        }
        case ResponseType::percentage: {
            std::string_view digits = body;
            if (digits.back() == '%') {
                digits = trim(digits.substr(0, digits.size() - 1));
            }
            if (auto n = parse_int(digits); n && *n >= 0 && *n <= 100) {
                return Percent{*n};
            }
            return std::nullopt;
        }
        case ResponseType::free_text:
            return FreeText{std::string(body)};
    }
    return std::nullopt;
}

std::string value_to_string(const ResponseValue& value) {
    if (const auto* level = std::get_if<Level>(&value)) {
        return std::to_string(level->value);
    }
    if (const auto* pct = std::get_if<Percent>(&value)) {
        return std::to_string(pct->value);
    }
    return std::get<FreeText>(value).text;
}

bool FeedbackSession::record(FeedbackResponse response) {
    if (response.level < 1 || response.level > 5) {
        throw Error(ErrorKind::invalid_input, "feedback level must be within 1..5");
    }
    for (auto& existing : responses) {
        if (existing.student_id == response.student_id) {
            if (!response.comment) {
                response.comment = existing.comment;
            }
            existing = std::move(response);
            return true;
        }
    }
    responses.push_back(std::move(response));
    return false;
}

std::string normalize_free_text(std::string_view text) {
    std::string out(trim(text));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int percent_bucket(int percent) {
    return std::clamp(percent, 0, 100) == 100 ? 9 : std::clamp(percent, 0, 100) / 10;
}

Histogram aggregate_survey(const std::vector<SurveyResponse>& responses, const Question& question) {
    Histogram h;
    for (const auto& r : responses) {
        check_response_value(r.value, question);
    }
    switch (question.response_type) {
        case ResponseType::five_level: {
            for (const auto& label : question.options) {
                h.buckets.push_back({label, 0});
            }
            for (const auto& r : responses) {
                ++h.buckets[std::get<Level>(r.value).value - 1].count;
            }
            break;
        }
        case ResponseType::percentage: {
            for (int d = 0; d < 10; ++d) {
                const int lo = d * 10;
                const int hi = d == 9 ? 100 : lo + 9;
                h.buckets.push_back({std::to_string(lo) + "-" + std::to_string(hi), 0});
            }
            for (const auto& r : responses) {
                ++h.buckets[percent_bucket(std::get<Percent>(r.value).value)].count;
            }
            break;
        }
        case ResponseType::free_text: {
            std::map<std::string, std::uint64_t> counts;
            for (const auto& r : responses) {
                ++counts[normalize_free_text(std::get<FreeText>(r.value).text)];
            }
            for (auto& [label, count] : counts) {
                h.buckets.push_back({label, count});
            }
            break;
        }
    }
    h.total = responses.size();
    return h;
}

Histogram aggregate_feedback(const FeedbackSession& session) {
    Histogram h;
    for (const auto& label : satisfaction_labels()) {
        h.buckets.push_back({label, 0});
    }
    for (const auto& r : session.responses) {
        ++h.buckets.at(static_cast<std::size_t>(r.level - 1)).count;
    }
    h.total = session.responses.size();
    return h;
}

PresenceSnapshot presence_of(const std::map<MemberId, MemberStatus>& roster_states) {
    PresenceSnapshot p;
    for (const auto& [member, status] : roster_states) {
        if (status == MemberStatus::online) {
            ++p.online;
        } else {
            ++p.offline;
        }
    }
    p.total = roster_states.size();
    return p;
}

bool is_sensitive_param(std::string_view key) {
    const std::string lowered = normalize_free_text(key);
    return lowered.find("token") != std::string::npos || lowered.find("key") != std::string::npos ||
           lowered.find("secret") != std::string::npos;
}

std::map<std::string, std::string> redact_params(const std::map<std::string, std::string>& params) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : params) {
        out.emplace(k, is_sensitive_param(k) ? "[REDACTED]" : v);
    }
    return out;
}

}  // namespace classbot
