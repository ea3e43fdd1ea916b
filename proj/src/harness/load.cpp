#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <unistd.h>

#include "classbot/api/server.hpp"
#include "classbot/core/percentile.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/harness/harness.hpp"
#include "classbot/store/audit_log.hpp"
#include "classbot/store/csv.hpp"
#include "classbot/store/exporter.hpp"

namespace classbot::harness {

namespace fs = std::filesystem;
using steady = std::chrono::steady_clock;

namespace {

/// Client-side budget, kept under the server's 30 per 10 s.
constexpr std::size_t kPaceBudget = 28;
constexpr auto kPaceWindow = std::chrono::milliseconds(10'200);

/// A complete server on loopback with a throwaway data root.
struct InProcessServer {
    fs::path root;
    SystemClock clock;
    std::unique_ptr<store::AuditLog> audit;
    std::unique_ptr<store::CsvExporter> exporter;
    std::unique_ptr<api::KeyStore> keys;
    std::unique_ptr<api::BotManager> bots;
    std::unique_ptr<api::ApiServer> server;
    int port = 0;

    explicit InProcessServer(std::uint64_t seed) {
        static std::atomic<int> counter{0};
        root = fs::temp_directory_path() /
               ("classbot-load-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(root);
        audit = std::make_unique<store::AuditLog>(root / "logs");
        exporter = std::make_unique<store::CsvExporter>(root);
        keys = std::make_unique<api::KeyStore>();
        api::BotManagerOptions opts;
        opts.clock = &clock;
        opts.audit = audit.get();
        opts.exports = exporter.get();
        opts.engine.code_seed = seed;
        bots = std::make_unique<api::BotManager>(opts);
        server = std::make_unique<api::ApiServer>(*bots, *keys, *audit);
        port = server->start("127.0.0.1", 0);
    }

    ~InProcessServer() {
        server->stop();
        server.reset();
        bots.reset();
        audit->flush();
        audit.reset();
        std::error_code ec;
        fs::remove_all(root, ec);
    }
};

struct Tally {
    std::mutex mu;
    std::vector<double> samples;
    std::map<std::string, std::uint64_t> errors;
    std::uint64_t requests = 0;
};

class Instructor {
public:
    Instructor(const std::string& host, int port, std::string key, Tally& tally)
        : http_(host, port), key_(std::move(key)), tally_(tally) {
        http_.set_keep_alive(true);
        http_.set_tcp_nodelay(true);
        http_.set_connection_timeout(5);
        http_.set_read_timeout(30);
    }

    /// Sends one request and returns the parsed body on HTTP 200.
    std::optional<json> call(const std::string& method, const std::string& path, const json& body = nullptr,
                             bool measured = true) {
        pace();
        httplib::Headers headers{{"Authorization", "Bearer " + key_}};
        if (!bot_.empty()) {
            headers.emplace("X-Bot-Id", bot_);
        }
        const std::string payload = body.is_null() ? std::string{} : body.dump();
        const auto t0 = steady::now();
        httplib::Result res = method == "GET" ? http_.Get(path, headers)
                              : method == "DELETE"
                                  ? http_.Delete(path, headers)
                                  : http_.Post(path, headers, payload, "application/json");
        const double ms = std::chrono::duration<double, std::milli>(steady::now() - t0).count();
        std::optional<json> out;
        std::string error;
        if (!res) {
            error = "connect";
        } else if (res->status != 200) {
            error = std::to_string(res->status);
        } else {
            json j = json::parse(res->body, nullptr, false);
            if (j.is_discarded()) {
                error = "bad_json";
            } else {
                out = std::move(j);
            }
        }
        std::lock_guard lock(tally_.mu);
        ++tally_.requests;
        if (measured) {
            tally_.samples.push_back(ms);
        }
        if (!error.empty()) {
            ++tally_.errors[error];
        }
        return out;
    }

    void check(bool ok, const std::string& what) {
        if (!ok) {
            std::lock_guard lock(tally_.mu);
            ++tally_.errors["check:" + what];
        }
    }

    void use_bot(std::string bot) { bot_ = std::move(bot); }
    const std::string& bot() const { return bot_; }

private:
    void pace() {
        const auto now = steady::now();
        while (!sent_.empty() && now - sent_.front() >= kPaceWindow) {
            sent_.pop_front();
        }
        if (sent_.size() >= kPaceBudget) {
            std::this_thread::sleep_until(sent_.front() + kPaceWindow);
            sent_.pop_front();
        }
        sent_.push_back(steady::now());
    }

    httplib::Client http_;
    std::string key_;
    std::string bot_;
    Tally& tally_;
    std::deque<steady::time_point> sent_;
};

std::string four_digits(std::uint64_t v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04u", static_cast<unsigned>(v % 10000));
    return buf;
}

json dm(const std::string& member, const std::string& text) {
    return {{"member", member}, {"behavior", "dm_text"}, {"text", text}};
}

json click(const std::string& member, const std::string& channel, const std::string& button) {
    return {{"member", member}, {"behavior", "click_button"}, {"button", button}, {"target", {{"channel", channel}}}};
}

std::uint64_t data_total(const std::optional<json>& r, const char* pointer) {
    if (!r) {
        return 0;
    }
    const json::json_pointer p(pointer);
    return r->contains(p) && r->at(p).is_number() ? r->at(p).get<std::uint64_t>() : 0;
}

/// One lecture: attendance, a simple survey, feedback and a short complex
/// survey. 17 requests.
void lecture(Instructor& in, const std::vector<std::string>& students, std::mt19937_64& rng) {
    const auto n = students.size();
    in.call("GET", "/api/health");
    in.call("POST", "/api/commands/ping");

    const std::string code = four_digits(rng());
    in.call("POST", "/api/attendance?code=" + code + "&group=g1&status=start");
    std::vector<std::string> order = students;
    std::shuffle(order.begin(), order.end(), rng);
    json steps = json::array();
    for (const auto& s : order) {
        steps.push_back(dm(s, code));
    }
    steps.push_back(dm(order.front(), four_digits(std::stoul(code) + 1)));
    steps.push_back(dm(order.back(), code));
    in.call("POST", "/api/bots/" + in.bot() + "/simulate", {{"steps", steps}});
    in.call("GET", "/api/attendance/sessions");
    auto stopped = in.call("POST", "/api/attendance?group=g1&status=stop");
    in.check(data_total(stopped, "/data/present_count") == n, "attendance_count");

    auto simple = in.call("POST", "/api/surveys/simple", {{"question", "How difficult was today's material?"}});
    const std::string simple_id = simple ? simple->value("/data/survey_id"_json_pointer, std::string{}) : "";
    steps = json::array();
    for (const auto& s : students) {
        steps.push_back(click(s, "surveys", "level-" + std::to_string(rng() % 5 + 1)));
    }
    in.call("POST", "/api/bots/" + in.bot() + "/simulate", {{"steps", steps}});
    auto results = in.call("GET", "/api/surveys/" + simple_id + "/results");
    in.check(data_total(results, "/data/questions/0/histogram/total") == n, "simple_total");
    in.call("POST", "/api/surveys/" + simple_id + "/close");

    auto fb = in.call("POST", "/api/feedback", {{"label", "today's lecture"}});
    const std::string fb_id = fb ? fb->value("/data/feedback_id"_json_pointer, std::string{}) : "";
    steps = json::array();
    for (const auto& s : students) {
        steps.push_back(click(s, "feedback", "level-" + std::to_string(rng() % 5 + 1)));
    }
    in.call("POST", "/api/bots/" + in.bot() + "/simulate", {{"steps", steps}});
    auto fb_results = in.call("GET", "/api/feedback/" + fb_id + "/results");
    in.check(data_total(fb_results, "/data/histogram/total") == n, "feedback_total");
    in.call("POST", "/api/feedback/" + fb_id + "/close");

    auto complex = in.call("POST", "/api/surveys/complex",
                           {{"title", "Lecture check"},
                            {"questions",
                             {{{"prompt", "How hard was it?"}, {"response_type", "five_level"}},
                              {{"prompt", "How much did you follow?"}, {"response_type", "percentage"}},
                              {{"prompt", "What was unclear?"}, {"response_type", "free_text"}}}}});
    const std::string complex_id = complex ? complex->value("/data/survey_id"_json_pointer, std::string{}) : "";
    steps = json::array();
    const std::size_t participants = std::min<std::size_t>(n, 10);
    for (std::size_t i = 0; i < participants; ++i) {
        steps.push_back(click(students[i], "surveys", "participate"));
        steps.push_back(dm(students[i], std::to_string(rng() % 5 + 1)));
        steps.push_back(dm(students[i], std::to_string(rng() % 101)));
        steps.push_back(dm(students[i], "topic " + std::to_string(rng() % 4)));
    }
    in.call("POST", "/api/bots/" + in.bot() + "/simulate", {{"steps", steps}});
    auto closed = in.call("POST", "/api/surveys/" + complex_id + "/close");
    in.check(data_total(closed, "/data/responses") == 3 * participants, "complex_responses");
}

}  // namespace

void LoadProfile::validate() const {
    if (instructors < 1) {
        throw Error(ErrorKind::invalid_input, "instructors must be at least 1");
    }
    if (students_per_group < 1) {
        throw Error(ErrorKind::invalid_input, "students must be at least 1");
    }
    if (duration_s < 1) {
        throw Error(ErrorKind::invalid_input, "duration must be at least 1 second");
    }
    if (!(threshold_ms > 0)) {
        throw Error(ErrorKind::invalid_input, "threshold must be positive");
    }
    if (!server_url.empty() && api_keys.empty()) {
        throw Error(ErrorKind::invalid_input, "an external server needs at least one --api-key");
    }
}

json LoadProfile::to_json() const {
    return {{"instructors", instructors},
            {"students_per_group", students_per_group},
            {"seed", seed},
            {"duration_s", duration_s},
            {"threshold_ms", threshold_ms},
            {"scenario", scenario},
            {"server", server_url.empty() ? "in-process" : server_url}};
}

std::uint64_t LoadReport::unexpected_errors() const {
    std::uint64_t n = 0;
    for (const auto& [k, v] : error_counts) {
        n += v;
    }
    return n;
}

bool LoadReport::passed() const { return requests > 0 && unexpected_errors() == 0 && p95_ms <= profile.threshold_ms; }

json LoadReport::to_json() const {
    return {{"profile", profile.to_json()},
            {"requests", requests},
            {"error_counts", error_counts},
            {"p50_ms", p50_ms},
            {"p95_ms", p95_ms},
            {"max_ms", max_ms},
            {"throughput_rps", throughput_rps},
            {"wall_s", wall_s},
            {"threshold_ms", profile.threshold_ms},
            {"passed", passed()}};
}

LoadReport run_load(const LoadProfile& profile) {
    profile.validate();
    std::unique_ptr<InProcessServer> local;
    std::string host = "127.0.0.1";
    int port = 0;
    std::vector<std::string> keys = profile.api_keys;
    if (profile.server_url.empty()) {
        local = std::make_unique<InProcessServer>(profile.seed);
        port = local->port;
        keys.clear();
        for (int i = 0; i < profile.instructors; ++i) {
            keys.push_back(local->keys->create("instructor-" + std::to_string(i + 1), "Instructor " + std::to_string(i + 1)));
        }
    } else {
        httplib::Client probe(profile.server_url);
        probe.set_connection_timeout(3);
        if (!probe.Get("/api/health")) {
            throw Error(ErrorKind::unavailable, "server " + profile.server_url + " is unreachable");
        }
        const std::string url = profile.server_url;
        const auto scheme = url.find("://");
        const std::string rest = scheme == std::string::npos ? url : url.substr(scheme + 3);
        const auto colon = rest.rfind(':');
        host = rest.substr(0, colon);
        port = colon == std::string::npos ? 80 : std::stoi(rest.substr(colon + 1));
    }

    json guild = {{"students", profile.students_per_group}};
    if (!profile.scenario.empty()) {
        guild = gateway::guild_to_json(gateway::load_scenario(profile.scenario).guild);
    }
    const auto spec = gateway::guild_from_json(guild);
    std::vector<std::string> students;
    for (const auto& m : spec.members) {
        students.push_back(m.id);
    }
    const int rounds = (profile.duration_s + 9) / 10;

    Tally tally;
    const auto t0 = steady::now();
    std::vector<std::thread> threads;
    for (int i = 0; i < profile.instructors; ++i) {
        threads.emplace_back([&, i] {
            Instructor in(host, port, keys[static_cast<std::size_t>(i) % keys.size()], tally);
            std::mt19937_64 rng(profile.seed * 1'000'003ULL + static_cast<std::uint64_t>(i));
            auto created = in.call("POST", "/api/bots",
                                   {{"name", "instructor-" + std::to_string(i + 1)},
                                    {"guild", guild},
                                    {"seed", profile.seed + static_cast<std::uint64_t>(i)}},
                                   false);
            if (!created) {
                return;
            }
            const std::string bot = created->at("/data/id"_json_pointer).get<std::string>();
            if (!in.call("POST", "/api/bots/" + bot + "/start", nullptr, false)) {
                return;
            }
            in.use_bot(bot);
            for (int r = 0; r < rounds; ++r) {
                lecture(in, students, rng);
            }
            in.use_bot("");
            in.call("POST", "/api/bots/" + bot + "/stop", nullptr, false);
        });
    }
    for (auto& t : threads) {
        t.join();
    }

    LoadReport report;
    report.profile = profile;
    report.wall_s = std::chrono::duration<double>(steady::now() - t0).count();
    report.requests = tally.requests;
    report.error_counts = tally.errors;
    report.p50_ms = percentile(tally.samples, 50);
    report.p95_ms = percentile(tally.samples, 95);
    report.max_ms = tally.samples.empty() ? 0 : *std::max_element(tally.samples.begin(), tally.samples.end());
    report.throughput_rps = report.wall_s > 0 ? static_cast<double>(report.requests) / report.wall_s : 0;
    if (!profile.report_path.empty()) {
        store::write_file_atomic(profile.report_path, report.to_json().dump(2) + "\n");
    }
    return report;
}

}  // namespace classbot::harness
