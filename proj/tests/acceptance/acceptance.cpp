// Acceptance checks. One line per criterion; exit status 1 if any fails.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>
#include <unistd.h>

#include "classbot/api/server.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/harness/harness.hpp"
#include "classbot/store/audit_log.hpp"
#include "classbot/store/csv.hpp"
#include "classbot/store/exporter.hpp"
#include "classbot/store/secrets.hpp"

using namespace classbot;
namespace fs = std::filesystem;

namespace {

// Runtime limits and tolerances.
constexpr double kProtocolLimitS = 1.0;
constexpr double kAttendanceLimitS = 30.0;
constexpr double kSurveyLimitS = 60.0;
constexpr double kLatencyLimitS = 120.0;
constexpr double kP95LimitMs = 300.0;
constexpr int kSurveySeeds = 100;
constexpr int kRoundTrips = 50;

const fs::path kScenarios = CLASSBOT_SCENARIO_DIR;

struct Verdict {
    bool ok = true;
    std::string detail;
};

/// Collects failed expectations without stopping the check.
struct Expect {
    Verdict out;
    void operator()(bool cond, const std::string& what) {
        if (!cond && out.ok) {
            out.ok = false;
            out.detail = what;
        } else if (!cond) {
            out.detail += "; " + what;
        }
    }
};

fs::path temp_dir(const std::string& tag) {
    static int n = 0;
    auto p = fs::temp_directory_path() / ("classbot-accept-" + tag + "-" + std::to_string(::getpid()) + "-" +
                                          std::to_string(n++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string student(int i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%03d", i);
    return id;
}

json dm(const std::string& member, const std::string& text) {
    return {{"member", member}, {"behavior", "dm_text"}, {"text", text}};
}

json click(const std::string& member, const std::string& channel, const std::string& button) {
    return {{"member", member}, {"behavior", "click_button"}, {"button", button}, {"target", {{"channel", channel}}}};
}

struct Http {
    int status = 0;
    json body;
    std::string message() const { return body.value("message", std::string{}); }
    const json& data() const { return body.at("data"); }
};

/// In-process REST stack: one bot with a classroom of `students`.
struct Stack {
    fs::path dir;
    SystemClock clock;
    store::MemoryAuditSink audit;
    std::unique_ptr<store::CsvExporter> exporter;
    std::unique_ptr<store::RegistryStore> registry;
    api::KeyStore keys;
    std::string key;
    std::unique_ptr<api::BotManager> bots;
    std::unique_ptr<api::ApiServer> server;
    std::unique_ptr<httplib::Client> client;

    Stack(int students, std::size_t rate_limit) : dir(temp_dir("rest")) {
        exporter = std::make_unique<store::CsvExporter>(dir);
        registry = std::make_unique<store::RegistryStore>(dir / "registry.json");
        key = keys.create("accept", "acceptance");
        api::BotManagerOptions o;
        o.clock = &clock;
        o.audit = &audit;
        o.exports = exporter.get();
        o.registry = registry.get();
        bots = std::make_unique<api::BotManager>(o);
        api::BotSpec spec;
        spec.name = "acceptance";
        spec.guild = gateway::GuildSpec::classroom(students);
        spec.seed = 11;
        bots->start(bots->create(std::move(spec)).id);
        api::ApiOptions opts;
        opts.rate_limit = rate_limit;
        server = std::make_unique<api::ApiServer>(*bots, keys, audit, opts);
        client = std::make_unique<httplib::Client>("127.0.0.1", server->start("127.0.0.1", 0));
        client->set_keep_alive(true);
    }

    ~Stack() {
        client.reset();
        server->stop();
        bots.reset();
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    Http call(const std::string& method, const std::string& path, const json& body = nullptr, bool auth = true) {
        httplib::Headers h;
        if (auth) h.emplace("Authorization", "Bearer " + key);
        auto r = method == "GET" ? client->Get(path, h)
                                 : client->Post(path, h, body.is_null() ? "" : body.dump(), "application/json");
        if (!r) throw std::runtime_error("no HTTP response for " + path);
        return {r->status, json::parse(r->body, nullptr, false)};
    }

    void simulate(const json& steps) {
        const auto r = call("POST", "/api/bots/b1/simulate", {{"steps", steps}, {"settle", true}});
        if (r.status != 200 || !r.data().at("settled").get<bool>()) {
            throw std::runtime_error("simulate failed: " + r.message());
        }
    }

    std::size_t dms_to(const std::string& member) const {
        std::size_t n = 0;
        for (const auto& rec : bots->session("b1")->platform->action_log()) {
            if (auto* d = std::get_if<gateway::SendDM>(&rec.action); d && d->member_id == member) ++n;
        }
        return n;
    }
};

// ---------------------------------------------------------------------------

Verdict protocol_fidelity() {
    Stack s(10, 1000);
    Expect expect;
    const auto r = s.call("POST", "/api/attendance?code=1423&group=g1&status=start");
    expect(r.status == 200, "HTTP " + std::to_string(r.status));
    expect(r.body.value("status", "") == "success", "status " + r.body.value("status", std::string("?")));
    expect(r.message().rfind("Attendance command executed", 0) == 0, "message '" + r.message() + "'");
    if (expect.out.ok) expect.out.detail = "200 success \"" + r.message() + "\"";
    return expect.out;
}

Verdict error_mapping() {
    Stack s(10, 1000);
    Expect expect;
    const int no_key = s.call("POST", "/api/attendance?code=1423&group=g1&status=start", nullptr, false).status;
    const int bad_code = s.call("POST", "/api/attendance?code=12&group=g1&status=start").status;
    s.bots->session("b1")->platform->set_reachable(false);
    const int fault = s.call("POST", "/api/attendance?code=1423&group=g1&status=start").status;
    expect(no_key == 403, "missing key gave " + std::to_string(no_key));
    expect(bad_code == 400, "malformed code gave " + std::to_string(bad_code));
    expect(fault == 500, "engine fault gave " + std::to_string(fault));
    if (expect.out.ok) expect.out.detail = "403 / 400 / 500";
    return expect.out;
}

Verdict attendance_oracle() {
    constexpr int kStudents = 120;
    const std::string code = "5807";
    gateway::SimScenario sc;
    sc.seed = 2024;
    sc.guild = gateway::GuildSpec::classroom(kStudents);
    std::mt19937_64 rng(sc.seed);
    std::int64_t t = 0;
    auto step = [&](const std::string& member, const std::string& text) {
        gateway::ScriptStep st;
        st.at_ms = t += 50;
        st.member = member;
        st.text = text;
        sc.script.push_back(st);
    };
    auto command = [&](json cmd) {
        gateway::ScriptStep st;
        st.at_ms = t += 50;
        st.behavior = gateway::Behavior::command;
        st.command = std::move(cmd);
        sc.script.push_back(st);
    };
    command({{"type", "start_attendance"}, {"group", "g1"}, {"code", code}});
    std::vector<int> order(kStudents);
    std::iota(order.begin(), order.end(), 1);
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < 3; ++k) step(student(order[k]), "5870");
    for (int i : order) step(student(i), i % 4 == 0 ? " " + code + " " : code);
    for (int k = 0; k < 5; ++k) step(student(order[static_cast<std::size_t>(rng() % kStudents)]), code);
    command({{"type", "stop_attendance"}, {"group", "g1"}});
    t += 1000;
    step(student(order[0]), code);
    step(student(order[1]), code);

    const fs::path dir = temp_dir("attendance");
    const auto outcome = harness::replay_scenario(sc, dir);
    Expect expect;
    const auto& session = outcome.state.at("attendance").at(0);
    const Timestamp opened = parse_iso8601(session.at("opened_at").get<std::string>());
    const Timestamp closed = parse_iso8601(session.at("closed_at").get<std::string>());

    // brute-force scan of every delivered event
    std::set<std::string> oracle;
    std::size_t dms = 0;
    for (const auto& ev : outcome.run.events) {
        const auto* d = std::get_if<gateway::DirectMessage>(&ev);
        if (d == nullptr) continue;
        ++dms;
        std::string text = d->text;
        text.erase(0, text.find_first_not_of(' '));
        text.erase(text.find_last_not_of(' ') + 1);
        if (d->at >= opened && d->at < closed && text == code) oracle.insert(d->member_id);
    }
    const auto rows = store::parse_csv(store::read_file(dir / "data/attendance/b1-att-1.csv"));
    std::set<std::string> exported;
    for (std::size_t i = 1; i < rows.size(); ++i) exported.insert(rows[i].at(3));
    const auto present = session.at("present_count").get<std::size_t>();

    expect(dms == kStudents + 3 + 5 + 2, "delivered " + std::to_string(dms) + " DMs");
    expect(present == kStudents, "present_count " + std::to_string(present));
    expect(rows.size() == kStudents + 1, "CSV rows " + std::to_string(rows.size()));
    expect(oracle.size() == present, "oracle found " + std::to_string(oracle.size()));
    expect(exported == oracle, "CSV members differ from the oracle");
    std::error_code ec;
    fs::remove_all(dir, ec);
    if (expect.out.ok) {
        expect.out.detail = "present 120, CSV 121 rows, oracle agrees (" + std::to_string(dms) + " DMs)";
    }
    return expect.out;
}

std::map<std::string, std::uint64_t> bucket_map(const json& histogram) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& b : histogram.at("buckets")) {
        if (b.at("count").get<std::uint64_t>() > 0) out[b.at("label")] = b.at("count");
    }
    return out;
}

std::string decile(int v) {
    const int d = std::min(v / 10, 9);
    return std::to_string(d * 10) + "-" + std::to_string(d == 9 ? 100 : d * 10 + 9);
}

std::string lower_trim(std::string s) {
    s.erase(0, s.find_first_not_of(' '));
    s.erase(s.find_last_not_of(' ') + 1);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

Verdict survey_oracle() {
    constexpr int kStudents = 30;
    static const std::vector<std::string> labels{"Very easy", "Easy", "Just right", "Difficult", "Very difficult"};
    static const std::vector<std::string> texts{"Recursion", "the proofs", "Big O", "pointers", "nothing"};
    Stack s(kStudents, 1000000);
    Expect expect;
    std::size_t checked = 0;
    for (int seed = 1; seed <= kSurveySeeds && expect.out.ok; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        const std::string tag = "seed " + std::to_string(seed);

        // five-level via buttons, with changed minds
        const std::string simple =
            s.call("POST", "/api/surveys/simple", {{"question", "Difficulty " + std::to_string(seed)}})
                .data()
                .at("survey_id");
        std::map<std::string, int> last_click;
        json steps = json::array();
        const int clicks = static_cast<int>(rng() % 45);
        for (int i = 0; i < clicks; ++i) {
            const std::string m = student(static_cast<int>(rng() % kStudents) + 1);
            const int level = static_cast<int>(rng() % 5) + 1;
            last_click[m] = level;
            steps.push_back(click(m, "surveys", "level-" + std::to_string(level)));
        }
        s.simulate(steps);
        std::map<std::string, std::uint64_t> five;
        for (const auto& [m, level] : last_click) ++five[labels[level - 1]];
        const auto res = s.call("GET", "/api/surveys/" + simple + "/results").data();
        const auto& h = res.at("questions").at(0).at("histogram");
        expect(bucket_map(h) == five, tag + ": five-level histogram");
        expect(h.at("total") == last_click.size(), tag + ": five-level total");
        s.call("POST", "/api/surveys/" + simple + "/close");

        // percentage, free text and verbal levels via the DM dialog
        const std::string complex =
            s.call("POST", "/api/surveys/complex",
                   {{"title", "Check " + std::to_string(seed)},
                    {"questions",
                     {{{"prompt", "How hard?"}, {"response_type", "five_level"}},
                      {{"prompt", "How far did you get?"}, {"response_type", "percentage"}},
                      {{"prompt", "What was unclear?"}, {"response_type", "free_text"}}}}})
                .data()
                .at("survey_id");
        std::map<std::string, std::uint64_t> levels;
        std::map<std::string, std::uint64_t> deciles;
        std::map<std::string, std::uint64_t> free;
        steps = json::array();
        const int participants = static_cast<int>(rng() % (kStudents + 1));
        for (int i = 1; i <= participants; ++i) {
            const std::string m = student(i);
            const int answers = static_cast<int>(rng() % 4);
            steps.push_back(click(m, "surveys", "participate"));
            if (answers >= 1) {
                const int level = static_cast<int>(rng() % 5) + 1;
                steps.push_back(dm(m, rng() % 2 ? std::to_string(level) : labels[level - 1]));
                ++levels[labels[level - 1]];
            }
            if (answers >= 2) {
                const int pct = static_cast<int>(rng() % 101);
                steps.push_back(dm(m, std::to_string(pct) + (rng() % 2 ? "%" : "")));
                ++deciles[decile(pct)];
            }
            if (answers >= 3) {
                std::string text = texts[rng() % texts.size()];
                if (rng() % 2) std::transform(text.begin(), text.end(), text.begin(), ::toupper);
                if (rng() % 2) text = "  " + text + " ";
                steps.push_back(dm(m, text));
                ++free[lower_trim(text)];
            }
        }
        s.simulate(steps);
        const auto cres = s.call("GET", "/api/surveys/" + complex + "/results").data();
        const auto& qs = cres.at("questions");
        expect(bucket_map(qs.at(0).at("histogram")) == levels, tag + ": verbal five-level histogram");
        expect(bucket_map(qs.at(1).at("histogram")) == deciles, tag + ": percentage histogram");
        expect(bucket_map(qs.at(2).at("histogram")) == free, tag + ": free-text histogram");
        s.call("POST", "/api/surveys/" + complex + "/close");
        ++checked;
    }
    if (expect.out.ok) expect.out.detail = std::to_string(checked) + " seeds x 3 response types match the recount";
    return expect.out;
}

Verdict complex_dm_flow() {
    constexpr int kFull = 12;
    constexpr int kPartial = 6;
    Stack s(kFull + kPartial + 2, 1000);
    Expect expect;
    const auto created = s.call("POST", "/api/surveys/complex",
                                {{"title", "Flow"},
                                 {"questions",
                                  {{{"prompt", "How hard?"}, {"response_type", "five_level"}},
                                   {{"prompt", "Progress?"}, {"response_type", "percentage"}},
                                   {{"prompt", "Unclear?"}, {"response_type", "free_text"}}}}});
    const std::string id = created.data().at("survey_id");
    std::map<std::string, std::size_t> before;
    for (int i = 1; i <= kFull + kPartial + 2; ++i) before[student(i)] = s.dms_to(student(i));
    json steps = json::array();
    std::map<std::string, int> answered;
    for (int i = 1; i <= kFull + kPartial; ++i) {
        const std::string m = student(i);
        const int n = i <= kFull ? 3 : 1 + (i % 2);
        answered[m] = n;
        steps.push_back(click(m, "surveys", "participate"));
        steps.push_back(dm(m, "4"));
        if (n >= 2) steps.push_back(dm(m, "60"));
        if (n >= 3) steps.push_back(dm(m, "Loop invariants"));
    }
    s.simulate(steps);
    std::size_t full_dms = 0;
    for (int i = 1; i <= kFull; ++i) full_dms += s.dms_to(student(i)) - before[student(i)];
    expect(full_dms == 4 * kFull, "full participants got " + std::to_string(full_dms) + " DMs");
    for (int i = kFull + 1; i <= kFull + kPartial; ++i) {
        const auto got = s.dms_to(student(i)) - before[student(i)];
        expect(got == static_cast<std::size_t>(answered[student(i)] + 1), student(i) + " got " + std::to_string(got));
    }
    const auto closed = s.call("POST", "/api/surveys/" + id + "/close").data();
    const std::size_t expected_rows = 3 * kFull + 3 * 1 + 3 * 2;  // partials answer 1 or 2 questions
    expect(closed.at("responses") == expected_rows, "stored " + closed.at("responses").dump());
    const auto rows = store::parse_csv(store::read_file(s.exporter->survey_path(id)));
    std::map<std::string, int> per_member;
    for (std::size_t r = 1; r < rows.size(); ++r) ++per_member[rows[r].at(3)];
    expect(per_member == answered, "CSV rows per member differ from answers given");
    std::size_t full_rows = 0;
    for (int i = 1; i <= kFull; ++i) full_rows += static_cast<std::size_t>(per_member[student(i)]);
    expect(full_rows == 3 * kFull, "full participants have " + std::to_string(full_rows) + " rows");
    if (expect.out.ok) {
        expect.out.detail = "N=" + std::to_string(kFull) + ": " + std::to_string(full_dms) + " DMs, " +
                            std::to_string(full_rows) + " rows; " + std::to_string(kPartial) +
                            " partial participants with partial rows";
    }
    return expect.out;
}

Verdict latency() {
    harness::LoadProfile p;
    p.instructors = 12;
    p.students_per_group = 50;
    p.seed = 7;
    p.duration_s = 60;
    p.threshold_ms = kP95LimitMs;
    const auto r = harness::run_load(p);
    Expect expect;
    expect(r.requests > 0, "no requests");
    expect(r.unexpected_errors() == 0, std::to_string(r.unexpected_errors()) + " errors " +
                                           json(r.error_counts).dump());
    expect(r.p95_ms <= kP95LimitMs, "p95 " + std::to_string(r.p95_ms) + " ms");
    char text[160];
    std::snprintf(text, sizeof text, "%llu requests, p50 %.1f ms, p95 %.1f ms (<= %.0f)",
                  static_cast<unsigned long long>(r.requests), r.p50_ms, r.p95_ms, kP95LimitMs);
    if (expect.out.ok) expect.out.detail = text;
    return expect.out;
}

Verdict rate_limiting() {
    Stack s(5, 30);
    Expect expect;
    for (int i = 0; i < 30; ++i) {
        const int status = s.call("POST", "/api/commands/ping").status;
        expect(status == 200, "request " + std::to_string(i + 1) + " gave " + std::to_string(status));
    }
    const int status = s.call("POST", "/api/attendance?code=1423&group=g1&status=start").status;
    expect(status == 429, "31st request gave " + std::to_string(status));
    std::size_t engine_commands = 0;
    std::size_t pings = 0;
    for (const auto& e : s.audit.events()) {
        if (e.action == "command.start_attendance") ++engine_commands;
        if (e.action == "command.ping") ++pings;
    }
    expect(engine_commands == 0, "engine ran the rejected command");
    expect(pings == 30, std::to_string(pings) + " pings audited");
    expect(s.bots->session("b1")->engine->attendance_sessions().empty(), "a session was opened");
    if (expect.out.ok) expect.out.detail = "31st request 429, no engine command audited";
    return expect.out;
}

Verdict persistence() {
    Expect expect;
    std::mt19937_64 rng(50);
    const std::string alphabet = "abcXYZ ,\"\n\r;'0189";
    auto text = [&](std::size_t max) {
        std::string s;
        const auto n = rng() % max + 1;
        for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
        return s;
    };
    const Timestamp t0 = parse_iso8601("2025-02-03T10:00:00Z");
    for (int i = 0; i < kRoundTrips; ++i) {
        AttendanceSession a;
        a.id = "b1-att-" + std::to_string(i + 1);
        a.group_id = "g" + std::to_string(rng() % 4);
        a.code = std::to_string(1000 + rng() % 9000);
        a.opened_at = t0;
        const int n = static_cast<int>(rng() % 20);
        for (int k = 0; k < n; ++k) a.add_checkin({student(k + 1), text(12), t0 + Millis(rng() % 100000)});
        a.close(t0 + std::chrono::hours(1));
        const auto back = store::parse_attendance_csv(store::attendance_csv(a));
        // session fields live on the check-in rows, so an empty session exports a bare header
        const bool meta = a.checkins.empty() ? back.session_id.empty() && back.group_id.empty() && back.code.empty()
                                             : back.session_id == a.id && back.group_id == a.group_id &&
                                                   back.code == a.code;
        expect(meta && back.checkins == a.checkins, "attendance round-trip " + a.id);

        SurveyDefinition d;
        d.id = "b1-srv-" + std::to_string(i + 1);
        d.kind = SurveyKind::complex;
        d.title = text(10);
        d.questions = {make_question(0, text(20), ResponseType::five_level),
                       make_question(1, text(20), ResponseType::percentage),
                       make_question(2, text(20), ResponseType::free_text)};
        std::vector<SurveyResponse> rs;
        for (int k = 0; k < static_cast<int>(rng() % 15); ++k) {
            const int q = static_cast<int>(rng() % 3);
            ResponseValue v = q == 0 ? ResponseValue{Level{static_cast<int>(rng() % 5) + 1}}
                              : q == 1 ? ResponseValue{Percent{static_cast<int>(rng() % 101)}}
                                       : ResponseValue{FreeText{text(30)}};
            rs.push_back({d.id, q, student(k + 1), v, t0 + Millis(rng() % 100000)});
        }
        const auto rows = store::parse_survey_csv(store::survey_csv(d, rs));
        bool same = rows.size() == rs.size();
        for (std::size_t k = 0; same && k < rs.size(); ++k) same = rows[k].response == rs[k];
        expect(same, "survey round-trip " + d.id);
    }

    const fs::path dir = temp_dir("persist");
    store::SecretsFile sf;
    sf.entries = {{"apikey:console", "record"}, {"bot-token:b1", "token-value"}};
    store::save_secrets(dir / "s.json", sf, "right", store::KdfParams::minimum());
    expect(store::load_secrets(dir / "s.json", "right") == sf, "secrets round-trip");
    std::string wrong_msg;
    std::string flip_msg;
    try {
        store::load_secrets(dir / "s.json", "wrong");
        expect(false, "wrong passphrase accepted");
    } catch (const Error& e) {
        expect(e.kind() == ErrorKind::authentication, "wrong passphrase kind");
        wrong_msg = e.what();
    }
    std::string raw = store::read_file(dir / "s.json");
    const auto pos = raw.find("\"ciphertext\"") + 20;
    raw[pos] = static_cast<char>(raw[pos] ^ 0x01);
    store::write_file_atomic(dir / "f.json", raw);
    try {
        store::load_secrets(dir / "f.json", "right");
        expect(false, "bit-flipped file accepted");
    } catch (const Error& e) {
        expect(e.kind() == ErrorKind::integrity, "bit flip kind");
        flip_msg = e.what();
    }
    expect(!wrong_msg.empty() && !flip_msg.empty() && wrong_msg != flip_msg, "errors are not distinct");

    {
        store::AuditLog log(dir / "logs");
        for (const char* ts : {"2025-03-01T23:59:59.999Z", "2025-03-02T00:00:00.000Z", "2025-03-02T00:00:00.001Z"}) {
            AuditEvent e;
            e.ts = parse_iso8601(ts);
            e.action = "check";
            log.append(e);
        }
        log.flush();
    }
    const auto files = store::audit_files(dir / "logs");
    expect(files.size() == 2, std::to_string(files.size()) + " audit files");
    if (files.size() == 2) {
        expect(store::read_audit_file(files[0]).size() == 1 && store::read_audit_file(files[1]).size() == 2,
               "events landed in the wrong file");
        expect(files[0].filename() == "audit-2025-03-01.jsonl", files[0].filename().string());
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    if (expect.out.ok) {
        expect.out.detail = std::to_string(kRoundTrips) +
                            " sessions + surveys re-parse equal; secrets auth/integrity distinct; audit split at "
                            "00:00Z";
    }
    return expect.out;
}

Verdict determinism() {
    Expect expect;
    std::vector<gateway::SimScenario> scenarios;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() == ".jsonl") scenarios.push_back(gateway::load_scenario(entry.path().string()));
    }
    // a larger generated classroom on top of the bundled scripts
    gateway::SimScenario big;
    big.seed = 99;
    big.guild = gateway::GuildSpec::classroom(60);
    big.guild.jitter_max_ms = 40;
    std::mt19937_64 rng(big.seed);
    std::int64_t t = 0;
    auto command = [&](json c) {
        gateway::ScriptStep st;
        st.at_ms = t += 100;
        st.behavior = gateway::Behavior::command;
        st.command = std::move(c);
        big.script.push_back(st);
    };
    command({{"type", "start_attendance"}, {"group", "g1"}});
    command({{"type", "create_simple_survey"}, {"question", "Pace?"}});
    for (int i = 0; i < 300; ++i) {
        gateway::ScriptStep st;
        st.at_ms = t += static_cast<std::int64_t>(rng() % 30);
        st.member = student(static_cast<int>(rng() % 60) + 1);
        if (rng() % 2) {
            st.text = std::to_string(rng() % 10000);
        } else {
            st.behavior = gateway::Behavior::click_button;
            st.button_id = "level-" + std::to_string(rng() % 5 + 1);
            st.target.channel = "surveys";
        }
        big.script.push_back(st);
    }
    command({{"type", "stop_attendance"}, {"group", "g1"}});
    scenarios.push_back(big);

    std::size_t bytes = 0;
    for (const auto& sc : scenarios) {
        const auto a = harness::replay_scenario(sc);
        const auto b = harness::replay_scenario(sc);
        expect(a.event_stream == b.event_stream, "event streams differ");
        expect(a.registry.dump() == b.registry.dump(), "registries differ");
        expect(!a.event_stream.empty(), "empty event stream");
        bytes += a.event_stream.size();
    }
    if (expect.out.ok) {
        expect.out.detail = std::to_string(scenarios.size()) + " scenarios, " + std::to_string(bytes) +
                            " event-stream bytes identical across runs";
    }
    return expect.out;
}

struct Criterion {
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Verdict()> run;
};

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<Criterion> criteria{
        {"protocol fidelity", kProtocolLimitS, protocol_fidelity},
        {"error mapping", 0, error_mapping},
        {"attendance oracle", kAttendanceLimitS, attendance_oracle},
        {"survey aggregation oracle", kSurveyLimitS, survey_oracle},
        {"complex survey DM flow", 0, complex_dm_flow},
        {"latency", kLatencyLimitS, latency},
        {"rate limiting", 0, rate_limiting},
        {"persistence round-trips", 0, persistence},
        {"determinism", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs >= c.limit_s) {
            o.ok = false;
            o.detail += "; took longer than " + std::to_string(static_cast<int>(c.limit_s)) + " s";
        }
        char timing[64];
        if (c.limit_s > 0) {
            std::snprintf(timing, sizeof timing, "%.2f s, limit %.0f s", secs, c.limit_s);
        } else {
            std::snprintf(timing, sizeof timing, "%.2f s", secs);
        }
        std::printf("[%s] %s: %s (%s)\n", o.ok ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing);
        std::fflush(stdout);
        failed += o.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
