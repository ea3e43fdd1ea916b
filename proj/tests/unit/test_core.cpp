#include <doctest.h>

#include <algorithm>
#include <random>
#include <regex>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/core/types.hpp"

using namespace classbot;

namespace {

SurveyResponse resp(const std::string& student, ResponseValue v, int q = 0) {
    SurveyResponse r;
    r.survey_id = "s";
    r.question_index = q;
    r.student_id = student;
    r.value = std::move(v);
    return r;
}

ResponseValue random_value(ResponseType t, std::mt19937_64& rng) {
    static const char* texts[] = {"proofs", " Proofs", "PROOFS ", "loops", "Loops", "recursion", "none"};
    switch (t) {
        case ResponseType::five_level: return Level{static_cast<int>(rng() % 5) + 1};
        case ResponseType::percentage: return Percent{static_cast<int>(rng() % 101)};
        case ResponseType::free_text: return FreeText{texts[rng() % 7]};
    }
    return Level{1};
}

// Independent recount: label -> count, using only the documented rules.
std::map<std::string, std::uint64_t> recount(const std::vector<SurveyResponse>& rs, const Question& q) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& r : rs) {
        std::string label;
        if (auto* l = std::get_if<Level>(&r.value)) {
            label = q.options[l->value - 1];
        } else if (auto* p = std::get_if<Percent>(&r.value)) {
            const int d = p->value == 100 ? 9 : p->value / 10;
            label = std::to_string(d * 10) + "-" + std::to_string(d == 9 ? 100 : d * 10 + 9);
        } else {
            std::string t = std::get<FreeText>(r.value).text;
            const auto b = t.find_first_not_of(" \t\r\n");
            const auto e = t.find_last_not_of(" \t\r\n");
            t = b == std::string::npos ? "" : t.substr(b, e - b + 1);
            for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            label = t;
        }
        ++out[label];
    }
    return out;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("attendance code examples") {
    CHECK(validate_attendance_code("1423"));
    CHECK_FALSE(validate_attendance_code(""));
    CHECK_FALSE(validate_attendance_code("12a4"));
    CHECK_FALSE(validate_attendance_code("12"));
    CHECK_FALSE(validate_attendance_code("14230"));
    CHECK(validate_attendance_code("0000"));
}

TEST_CASE("attendance code agrees with a regex over all 4-char alphanumerics") {
    const std::regex oracle("^[0-9]{4}$");
    const std::string alphabet = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string code(4, ' ');
    std::size_t mismatches = 0;
    std::size_t accepted = 0;
    for (char a : alphabet)
        for (char b : alphabet)
            for (char c : alphabet)
                for (char d : alphabet) {
                    code[0] = a, code[1] = b, code[2] = c, code[3] = d;
                    const bool got = validate_attendance_code(code);
                    accepted += got;
                    mismatches += got != std::regex_match(code, oracle);
                }
    CHECK(mismatches == 0);
    CHECK(accepted == 10000);
}

TEST_CASE("attendance code agrees with a regex for other lengths and symbols") {
    const std::regex oracle("^[0-9]{4}$");
    const std::string alphabet = "09a -/\xd9";
    std::size_t mismatches = 0;
    for (std::size_t len = 0; len <= 6; ++len) {
        std::size_t n = 1;
        for (std::size_t i = 0; i < len; ++i) n *= alphabet.size();
        for (std::size_t k = 0; k < n; ++k) {
            std::string s;
            for (std::size_t i = 0, v = k; i < len; ++i, v /= alphabet.size()) s += alphabet[v % alphabet.size()];
            mismatches += validate_attendance_code(s) != std::regex_match(s, oracle);
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("five-level aggregation of [3,3,1,5,3]") {
    const Question q = make_question(0, "How hard?", ResponseType::five_level);
    std::vector<SurveyResponse> rs;
    const std::vector<int> levels{3, 3, 1, 5, 3};
    for (std::size_t i = 0; i < levels.size(); ++i) {
        rs.push_back(resp("m" + std::to_string(i), Level{levels[i]}));
    }
    const Histogram h = aggregate_survey(rs, q);
    REQUIRE(h.buckets.size() == 5);
    for (int level = 1; level <= 5; ++level) {
        CHECK(h.buckets[level - 1].count == static_cast<std::uint64_t>(std::count(levels.begin(), levels.end(), level)));
        CHECK(h.buckets[level - 1].label == default_difficulty_labels()[level - 1]);
    }
    CHECK(h.total == 5);
}

TEST_CASE("empty aggregation is all zeros") {
    for (auto t : {ResponseType::five_level, ResponseType::percentage}) {
        const Histogram h = aggregate_survey({}, make_question(0, "q", t));
        CHECK(h.total == 0);
        CHECK(!h.buckets.empty());
        for (const auto& b : h.buckets) CHECK(b.count == 0);
    }
    CHECK(aggregate_survey({}, make_question(0, "q", ResponseType::free_text)).buckets.empty());
}

TEST_CASE("percentage deciles for 0 and 100") {
    const Question q = make_question(0, "q", ResponseType::percentage);
    const Histogram h = aggregate_survey({resp("a", Percent{0}), resp("b", Percent{100})}, q);
    REQUIRE(h.buckets.size() == 10);
    CHECK(h.buckets[0].label == "0-9");
    CHECK(h.buckets[0].count == 1);
    CHECK(h.buckets[9].label == "90-100");
    CHECK(h.buckets[9].count == 1);
    CHECK(h.total == 2);
    CHECK(percent_bucket(9) == 0);
    CHECK(percent_bucket(10) == 1);
    CHECK(percent_bucket(99) == 9);
}

TEST_CASE("variant mismatch is rejected") {
    const Question q = make_question(0, "q", ResponseType::five_level);
    CHECK_THROWS_AS(aggregate_survey({resp("a", Percent{40})}, q), Error);
    CHECK_THROWS_AS(check_response_value(Level{6}, q), Error);
    CHECK_THROWS_AS(check_response_value(Percent{101}, make_question(0, "q", ResponseType::percentage)), Error);
}

TEST_CASE("aggregation conserves responses, matches a recount and ignores order") {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 300; ++round) {
        const auto type = static_cast<ResponseType>(round % 3);
        const Question q = make_question(0, "q", type);
        std::vector<SurveyResponse> rs;
        const int n = static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            rs.push_back(resp("m" + std::to_string(i), random_value(type, rng)));
        }
        const Histogram h = aggregate_survey(rs, q);
        std::uint64_t sum = 0;
        std::map<std::string, std::uint64_t> got;
        for (const auto& b : h.buckets) {
            sum += b.count;
            if (b.count) got[b.label] = b.count;
        }
        CHECK(h.total == rs.size());
        CHECK(sum == h.total);
        CHECK(got == recount(rs, q));
        std::shuffle(rs.begin(), rs.end(), rng);
        CHECK(aggregate_survey(rs, q) == h);
    }
}

TEST_CASE("free text normalization") {
    CHECK(normalize_free_text("  The PROOFS \t") == "the proofs");
    CHECK(normalize_free_text("") == "");
}

TEST_CASE("parse_answer") {
    const Question five = make_question(0, "q", ResponseType::five_level);
    CHECK(parse_answer("3", five) == std::optional<ResponseValue>(Level{3}));
    CHECK(parse_answer(" difficult ", five) == std::optional<ResponseValue>(Level{4}));
    CHECK_FALSE(parse_answer("6", five));
    const Question pct = make_question(1, "q", ResponseType::percentage);
    CHECK(parse_answer("55", pct) == std::optional<ResponseValue>(Percent{55}));
    CHECK(parse_answer("100%", pct) == std::optional<ResponseValue>(Percent{100}));
    CHECK_FALSE(parse_answer("101", pct));
    CHECK_FALSE(parse_answer("abc", pct));
    const Question text = make_question(2, "q", ResponseType::free_text);
    CHECK(parse_answer("loops", text) == std::optional<ResponseValue>(FreeText{"loops"}));
    CHECK_FALSE(parse_answer("   ", text));
}

TEST_CASE("presence counts") {
    CHECK(presence_of({}) == PresenceSnapshot{0, 0, 0});
    const std::map<MemberId, MemberStatus> three{
        {"a", MemberStatus::online}, {"b", MemberStatus::offline}, {"c", MemberStatus::online}};
    CHECK(presence_of(three) == PresenceSnapshot{2, 1, 3});
    std::map<MemberId, MemberStatus> big;
    for (int i = 0; i < 150; ++i) big["s" + std::to_string(i)] = MemberStatus::online;
    CHECK(presence_of(big) == PresenceSnapshot{150, 0, 150});

    std::mt19937_64 rng(5);
    for (int round = 0; round < 50; ++round) {
        std::map<MemberId, MemberStatus> m;
        std::uint64_t online = 0;
        const int n = static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            const bool on = rng() % 2;
            online += on;
            m["m" + std::to_string(i)] = on ? MemberStatus::online : MemberStatus::offline;
        }
        const auto p = presence_of(m);
        CHECK(p.online == online);
        CHECK(p.total == p.online + p.offline);
    }
}

TEST_CASE("check-in dedup keeps the first entry") {
    AttendanceSession s;
    s.id = "a1";
    s.group_id = "g1";
    s.code = "1423";
    s.opened_at = parse_iso8601("2025-01-06T08:00:00Z");
    std::mt19937_64 rng(9);
    std::set<std::string> seen;
    for (int i = 0; i < 500; ++i) {
        const std::string id = "s" + std::to_string(rng() % 40);
        const auto before = s.checkins.size();
        const bool added = s.add_checkin({id, id, s.opened_at + Millis(i)});
        CHECK(added == seen.insert(id).second);
        CHECK(s.checkins.size() == before + (added ? 1 : 0));
    }
    CHECK(s.present_count() == seen.size());
    CHECK_THROWS_AS(s.add_checkin({"", "x", s.opened_at}), Error);
    CHECK_THROWS_AS(s.add_checkin({"late", "x", s.opened_at - Millis(1)}), Error);
    s.close(s.opened_at + Millis(1000));
    CHECK_THROWS_AS(s.add_checkin({"new", "x", s.opened_at + Millis(2000)}), Error);
    CHECK_THROWS_AS(s.close(s.opened_at + Millis(3000)), Error);
}

TEST_CASE("bot state transitions") {
    const std::set<std::pair<BotState, BotState>> allowed{
        {BotState::stopped, BotState::starting}, {BotState::starting, BotState::running},
        {BotState::running, BotState::stopped},  {BotState::stopped, BotState::error},
        {BotState::starting, BotState::error},   {BotState::running, BotState::error},
        {BotState::error, BotState::error},      {BotState::error, BotState::stopped}};
    const BotState all[] = {BotState::stopped, BotState::starting, BotState::running, BotState::error};
    for (auto from : all) {
        for (auto to : all) {
            CAPTURE(static_cast<int>(from));
            CAPTURE(static_cast<int>(to));
            CHECK(is_valid_transition(from, to) == allowed.contains({from, to}));
            BotInstance b;
            b.state = from;
            if (allowed.contains({from, to})) {
                b.transition_to(to);
                CHECK(b.state == to);
            } else {
                CHECK_THROWS_AS(b.transition_to(to), Error);
                CHECK(b.state == from);
            }
        }
    }
}

TEST_CASE("bot instance round-trips without its token reference") {
    std::mt19937_64 rng(77);
    const BotState states[] = {BotState::stopped, BotState::starting, BotState::running, BotState::error};
    for (int i = 0; i < 200; ++i) {
        BotInstance b;
        b.id = "b" + std::to_string(rng() % 1000 + 1);
        b.name = "bot \"" + std::to_string(rng()) + "\", room 3";
        b.token_ref = token_ref_for(b.id);
        b.guild_id = "guild-" + std::to_string(rng() % 50);
        b.mode = rng() % 2 ? BotMode::production : BotMode::development;
        b.state = states[rng() % 4];
        b.created_at = Timestamp(Millis(1'700'000'000'000LL + static_cast<std::int64_t>(rng() % 100'000'000'000ULL)));
        const json j = b;
        const std::string text = j.dump();
        CHECK(text.find("token") == std::string::npos);
        CHECK(text.find(b.token_ref) == std::string::npos);
        const BotInstance back = json::parse(text).get<BotInstance>();
        CHECK(back == b);
    }
}

TEST_CASE("survey definition rules") {
    SurveyDefinition d;
    d.id = "s1";
    d.kind = SurveyKind::simple;
    d.title = "t";
    d.questions = {make_question(0, "q", ResponseType::five_level)};
    CHECK_NOTHROW(d.validate());
    d.questions.push_back(make_question(1, "q2", ResponseType::five_level));
    CHECK_THROWS_AS(d.validate(), Error);
    d.kind = SurveyKind::complex;
    CHECK_NOTHROW(d.validate());
    d.questions[1].index = 2;
    CHECK_THROWS_AS(d.validate(), Error);
    d.questions = {make_question(0, "q", ResponseType::percentage)};
    d.kind = SurveyKind::simple;
    CHECK_THROWS_AS(d.validate(), Error);
    d.kind = SurveyKind::complex;
    d.questions = {};
    CHECK_THROWS_AS(d.validate(), Error);
    CHECK_THROWS_AS(parse_response_type("stars"), Error);
    CHECK(make_question(0, "q", ResponseType::five_level).options == default_difficulty_labels());
    CHECK(make_question(0, "q", ResponseType::percentage).options.empty());
}

TEST_CASE("feedback keeps one response per student") {
    FeedbackSession f;
    CHECK_FALSE(f.record({"a", 3, std::nullopt, {}}));
    CHECK_FALSE(f.record({"b", 5, std::nullopt, {}}));
    CHECK(f.record({"a", 1, std::nullopt, {}}));
    CHECK(f.responses.size() == 2);
    CHECK_THROWS_AS(f.record({"c", 0, std::nullopt, {}}), Error);
    CHECK_THROWS_AS(f.record({"c", 6, std::nullopt, {}}), Error);
    const Histogram h = aggregate_feedback(f);
    CHECK(h.total == 2);
    CHECK(h.buckets[0].count == 1);
    CHECK(h.buckets[4].count == 1);
}

TEST_CASE("redaction") {
    CHECK(is_sensitive_param("token"));
    CHECK(is_sensitive_param("api_KEY"));
    CHECK(is_sensitive_param("client_secret"));
    CHECK_FALSE(is_sensitive_param("group"));
    const auto r = redact_params({{"bot_token", "abc"}, {"group", "g1"}});
    CHECK(r.at("bot_token") == "[REDACTED]");
    CHECK(r.at("group") == "g1");
}

TEST_CASE("timestamps") {
    const auto t = parse_iso8601("2025-01-06T08:00:00.123Z");
    CHECK(format_iso8601(t) == "2025-01-06T08:00:00.123Z");
    CHECK(format_iso8601(parse_iso8601("2025-01-06T08:00:00Z")) == "2025-01-06T08:00:00.000Z");
    CHECK(utc_date(parse_iso8601("2025-12-31T23:59:59.999Z")) == "2025-12-31");
    CHECK(utc_date(parse_iso8601("2026-01-01T00:00:00.000Z")) == "2026-01-01");
    CHECK_THROWS_AS(parse_iso8601("yesterday"), Error);
}

}
