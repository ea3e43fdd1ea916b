#include "classbot/api/server.hpp"

#include <cstdlib>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "classbot/core/serialize.hpp"
#include "classbot/gateway/scenario.hpp"

namespace classbot::api {

namespace {

using engine::Command;
using engine::CommandBody;
using engine::CommandResult;

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

struct Reply {
    int http = 200;
    bool ok = true;
    std::string message;
    json data;
};

Reply success(std::string message, json data = nullptr) { return {200, true, std::move(message), std::move(data)}; }

Reply failure(ErrorKind kind, std::string message) {
    return {http_status_for(kind), false, std::move(message), nullptr};
}

Reply from_result(const CommandResult& r) {
    if (r.ok()) {
        return success(r.message, r.payload);
    }
    return failure(r.error, r.message);
}

/// Per-request state shared between the wrapper and a handler.
struct Call {
    const httplib::Request& req;
    ApiKey key;
    /// Set once the engine owns the audit event for this request.
    bool audited = false;
    std::map<std::string, std::string> params;

    json body() const {
        if (req.body.empty()) {
            return json::object();
        }
        json j = json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorKind::invalid_input, "request body must be a JSON object");
        }
        return j;
    }

    std::string param(const std::string& name) const {
        return req.has_param(name) ? req.get_param_value(name) : std::string{};
    }

    std::string bot_hint() const {
        const std::string header = req.get_header_value("X-Bot-Id");
        return header.empty() ? param("bot") : header;
    }
};

std::string string_field(const json& body, const char* key) {
    if (!body.contains(key) || !body.at(key).is_string() || body.at(key).get<std::string>().empty()) {
        throw Error(ErrorKind::invalid_input, std::string("missing field '") + key + "'");
    }
    return body.at(key).get<std::string>();
}

}  // namespace

ServerConfig ServerConfig::from_env() {
    ServerConfig c;
    const std::string bind = env_or("CLASSBOT_BIND", "127.0.0.1:8080");
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
        throw Error(ErrorKind::invalid_input, "CLASSBOT_BIND must be host:port");
    }
    c.host = bind.substr(0, colon);
    try {
        c.port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_input, "CLASSBOT_BIND has a bad port");
    }
    c.data_dir = env_or("CLASSBOT_DATA_DIR", ".");
    c.secrets_path = env_or("CLASSBOT_SECRETS", "");
    c.passphrase = env_or("CLASSBOT_SECRETS_PASSPHRASE", "");
    c.console_origin = env_or("CLASSBOT_CONSOLE_ORIGIN", c.console_origin);
    return c;
}

std::filesystem::path ServerConfig::secrets_file() const {
    return secrets_path.empty() ? data_dir / ".secrets.json" : secrets_path;
}

int http_status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input:
        case ErrorKind::not_found:
        case ErrorKind::conflict: return 400;
        case ErrorKind::authentication: return 403;
        case ErrorKind::rate_limited: return 429;
        case ErrorKind::unavailable:
        case ErrorKind::permission_denied:
        case ErrorKind::integrity:
        case ErrorKind::io:
        case ErrorKind::internal: return 500;
    }
    return 500;
}

json api_response(bool ok, const std::string& message, const json& data) {
    json j{{"status", ok ? "success" : "error"}, {"message", message}};
    if (!data.is_null()) {
        j["data"] = data;
    }
    return j;
}

struct ApiServer::Impl {
    BotManager& bots;
    KeyStore& keys;
    AuditSink& audit;
    ApiOptions options;
    SystemClock system_clock;
    RateLimiter limiter;
    httplib::Server server;

    Impl(BotManager& b, KeyStore& k, AuditSink& a, ApiOptions o)
        : bots(b),
          keys(k),
          audit(a),
          options(std::move(o)),
          limiter(options.limiter_clock != nullptr ? *options.limiter_clock : system_clock, options.rate_limit,
                  options.rate_window) {
        routes();
    }

    void send(httplib::Response& res, const Reply& r) {
        res.status = r.http;
        std::string message = r.message;
        if (!r.ok && message.empty()) {
            message = "request failed";
        }
        res.set_content(api_response(r.ok, message, r.data).dump(), "application/json");
    }

    void cors(httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", options.console_origin);
        res.set_header("Vary", "Origin");
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, X-Bot-Id");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    }

    void record(const std::string& actor, const std::string& action, std::map<std::string, std::string> params,
                bool ok, const std::string& detail) {
        audit.append(AuditEvent{std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()), actor, action,
                                std::move(params), ok ? Outcome::success : Outcome::error, detail});
    }

    std::optional<ApiKey> bearer(const httplib::Request& req) {
        const std::string h = req.get_header_value("Authorization");
        constexpr std::string_view prefix = "Bearer ";
        if (h.size() <= prefix.size() || std::string_view(h).substr(0, prefix.size()) != prefix) {
            return std::nullopt;
        }
        return keys.authenticate(std::string_view(h).substr(prefix.size()));
    }

    /// Wraps a protected route: auth, rate limit, handler, error mapping and
    /// the single audit event of a mutating request.
    httplib::Server::Handler protect(bool mutating, std::string action, std::function<Reply(Call&)> handler) {
        return [this, mutating, action = std::move(action), handler = std::move(handler)](
                   const httplib::Request& req, httplib::Response& res) {
            cors(res);
            const std::map<std::string, std::string> where{{"method", req.method}, {"path", req.path}};
            auto key = bearer(req);
            if (!key) {
                record("anonymous", "auth.rejected", where, false, "missing or invalid API key");
                send(res, failure(ErrorKind::authentication, "missing or invalid API key"));
                return;
            }
            if (!limiter.allow(key->key_id)) {
                record(key->key_id, "request.rate_limited", where, false, "rate limited");
                send(res, failure(ErrorKind::rate_limited, "rate limit exceeded: at most " +
                                                               std::to_string(limiter.limit()) +
                                                               " requests per 10 seconds"));
                return;
            }
            Call call{req, *key, false, {}};
            Reply reply;
            try {
                reply = handler(call);
            } catch (const Error& e) {
                reply = failure(e.kind(), e.what());
            } catch (const json::exception& e) {
                reply = failure(ErrorKind::invalid_input, std::string("malformed request: ") + e.what());
            } catch (const std::exception& e) {
                reply = failure(ErrorKind::internal, e.what());
            }
            if (mutating && !call.audited) {
                call.params.insert(where.begin(), where.end());
                record(key->key_id, action, std::move(call.params), reply.ok, reply.message);
            }
            send(res, reply);
        };
    }

    Reply dispatch(Call& call, CommandBody body) {
        const std::string bot = bots.resolve(call.bot_hint());
        call.params["bot"] = bot;
        auto session = bots.session(bot);
        bool queued = false;
        const CommandResult r = session->runner->submit(Command{call.key.key_id, std::move(body)}, &queued);
        call.audited = queued;
        Reply reply = from_result(r);
        if (reply.ok && reply.data.is_object()) {
            reply.data["bot_id"] = bot;
        }
        return reply;
    }

    json query(Call& call, std::function<json(const engine::InteractionEngine&)> f) {
        const std::string bot = bots.resolve(call.bot_hint());
        return bots.session(bot)->runner->query(std::move(f));
    }

    void routes();
    Reply health(const httplib::Request& req);
    Reply simulate(Call& call, const std::string& bot_id);
};

Reply ApiServer::Impl::health(const httplib::Request& req) {
    json data{{"server", "online"},
              {"checked_at", format_iso8601(std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()))}};
    if (!req.has_header("Authorization")) {
        return success("Server Online", std::move(data));
    }
    auto key = bearer(req);
    if (!key) {
        return failure(ErrorKind::authentication, "missing or invalid API key");
    }
    if (!limiter.allow(key->key_id)) {
        return failure(ErrorKind::rate_limited, "rate limit exceeded");
    }
    PresenceSnapshot presence;
    try {
        const std::string header = req.get_header_value("X-Bot-Id");
        const std::string bot = bots.resolve(header.empty() && req.has_param("bot") ? req.get_param_value("bot")
                                                                                   : header);
        data["bot_id"] = bot;
        presence = bots.session(bot)->platform->presence();
    } catch (const Error&) {
        // No running bot: nobody is visible.
    }
    data["presence"] = presence;
    return success("Server Online", std::move(data));
}

Reply ApiServer::Impl::simulate(Call& call, const std::string& bot_id) {
    call.params["bot"] = bot_id;
    if (bots.get(bot_id).mode != BotMode::development) {
        throw Error(ErrorKind::invalid_input, "simulation is only available for development bots");
    }
    const json body = call.body();
    if (!body.contains("steps") || !body.at("steps").is_array()) {
        throw Error(ErrorKind::invalid_input, "missing 'steps' array");
    }
    auto session = bots.session(bot_id);
    auto& platform = *session->platform;
    std::vector<gateway::ScriptStep> steps;
    for (const auto& raw : body.at("steps")) {
        json j = raw;
        if (!j.is_object()) {
            throw Error(ErrorKind::invalid_input, "each step must be an object");
        }
        if (!j.contains("at_ms")) {
            j["at_ms"] = 0;
        }
        auto step = gateway::step_from_json(j, 0);
        if (step.behavior == gateway::Behavior::command) {
            throw Error(ErrorKind::invalid_input, "command steps are not accepted here; use the command routes");
        }
        if (!platform.lookup_member(step.member)) {
            throw Error(ErrorKind::not_found, "unknown member '" + step.member + "'");
        }
        steps.push_back(std::move(step));
    }
    std::size_t emitted = 0;
    std::size_t unresolved = 0;
    for (const auto& step : steps) {
        std::optional<gateway::ChatEvent> ev;
        switch (step.behavior) {
            case gateway::Behavior::dm_text: ev = platform.member_dm(step.member, step.text); break;
            case gateway::Behavior::click_button: ev = platform.member_click(step.member, step.target, step.button_id); break;
            case gateway::Behavior::go_offline: ev = platform.member_set_online(step.member, false); break;
            case gateway::Behavior::go_online: ev = platform.member_set_online(step.member, true); break;
            case gateway::Behavior::command: break;
        }
        ev ? ++emitted : ++unresolved;
    }
    call.params["steps"] = std::to_string(steps.size());
    bool settled = false;
    if (body.value("settle", true)) {
        settled = session->runner->wait_idle(options.settle_timeout);
    }
    return success("Simulated " + std::to_string(emitted) + " member actions",
                   {{"emitted", emitted}, {"unresolved", unresolved}, {"settled", settled}});
}

void ApiServer::Impl::routes() {
    auto& s = server;

    // A request without Content-Length or Transfer-Encoding has no body.
    // httplib would otherwise read a bodiless POST until the socket times out.
    s.set_pre_routing_handler([](const httplib::Request& req, httplib::Response&) {
        if (!req.has_header("Content-Length") && !req.has_header("Transfer-Encoding")) {
            const_cast<httplib::Request&>(req).headers.emplace("Content-Length", "0");
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    s.Options(R"(/api/.*)", [this](const httplib::Request&, httplib::Response& res) {
        cors(res);
        res.status = 204;
    });

    s.Get("/api/health", [this](const httplib::Request& req, httplib::Response& res) {
        cors(res);
        send(res, health(req));
    });

    // Attendance keeps the query-parameter form.
    s.Post("/api/attendance", protect(true, "command.attendance", [this](Call& c) {
        const std::string status = c.param("status");
        const std::string group = c.param("group");
        c.params["status"] = status;
        c.params["group"] = group;
        if (status != "start" && status != "stop") {
            throw Error(ErrorKind::invalid_input, "status must be 'start' or 'stop'");
        }
        if (group.empty()) {
            throw Error(ErrorKind::invalid_input, "missing parameter 'group'");
        }
        if (status == "start") {
            std::optional<std::string> code;
            if (c.req.has_param("code")) {
                code = c.param("code");
            }
            return dispatch(c, engine::StartAttendance{group, code});
        }
        return dispatch(c, engine::StopAttendance{group});
    }));

    s.Get("/api/attendance/sessions", protect(false, "", [this](Call& c) {
        return success("Attendance sessions", query(c, [](const engine::InteractionEngine& e) {
                           json out = json::array();
                           for (const auto& s : e.attendance_sessions()) {
                               out.push_back(s.to_json());
                           }
                           return out;
                       }));
    }));

    s.Get(R"(/api/attendance/sessions/([^/]+))", protect(false, "", [this](Call& c) {
        const std::string id = c.req.matches[1];
        return success("Attendance session " + id, query(c, [id](const engine::InteractionEngine& e) {
                           json out = e.attendance_summary(id).to_json();
                           out["checkins"] = e.attendance_session(id).checkins;
                           return out;
                       }));
    }));

    s.Post("/api/surveys/simple", protect(true, "command.create_simple_survey", [this](Call& c) {
        return dispatch(c, engine::CreateSimpleSurvey{engine::simple_survey_from_json(c.body())});
    }));

    s.Post("/api/surveys/complex", protect(true, "command.create_complex_survey", [this](Call& c) {
        return dispatch(c, engine::CreateComplexSurvey{engine::complex_survey_from_json(c.body())});
    }));

    s.Get("/api/surveys", protect(false, "", [this](Call& c) {
        return success("Surveys", query(c, [](const engine::InteractionEngine& e) { return e.survey_list(); }));
    }));

    s.Get(R"(/api/surveys/([^/]+)/results)", protect(false, "", [this](Call& c) {
        const std::string id = c.req.matches[1];
        return success("Survey results " + id,
                       query(c, [id](const engine::InteractionEngine& e) { return e.survey_results(id); }));
    }));

    s.Post(R"(/api/surveys/([^/]+)/close)", protect(true, "command.close_survey", [this](Call& c) {
        return dispatch(c, engine::CloseSurvey{c.req.matches[1]});
    }));

    s.Post("/api/feedback", protect(true, "command.start_feedback", [this](Call& c) {
        const json body = c.body();
        return dispatch(c, engine::StartFeedback{body.value("channel_id", std::string{}), string_field(body, "label")});
    }));

    s.Get(R"(/api/feedback/([^/]+)/results)", protect(false, "", [this](Call& c) {
        const std::string id = c.req.matches[1];
        return success("Feedback results " + id,
                       query(c, [id](const engine::InteractionEngine& e) { return e.feedback_results(id); }));
    }));

    s.Post(R"(/api/feedback/([^/]+)/close)", protect(true, "command.close_feedback", [this](Call& c) {
        return dispatch(c, engine::CloseFeedback{c.req.matches[1]});
    }));

    s.Get("/api/bots", protect(false, "", [this](Call&) {
        return success("Bots", json(bots.list()));
    }));

    s.Post("/api/bots", protect(true, "bot.create", [this](Call& c) {
        const json body = c.body();
        BotSpec spec;
        spec.name = string_field(body, "name");
        spec.guild_id = body.value("guild_id", std::string{});
        spec.mode = body.value("mode", std::string{"development"}) == "production" ? BotMode::production
                                                                                   : BotMode::development;
        if (body.contains("mode") && body.at("mode") != "production" && body.at("mode") != "development") {
            throw Error(ErrorKind::invalid_input, "mode must be 'development' or 'production'");
        }
        spec.guild = body.contains("guild") ? gateway::guild_from_json(body.at("guild"))
                                            : gateway::GuildSpec::classroom(body.value("students", 30));
        if (body.contains("token")) {
            spec.token = string_field(body, "token");
        }
        if (body.contains("seed")) {
            spec.seed = body.at("seed").get<std::uint64_t>();
        }
        c.params["name"] = spec.name;
        const BotInstance bot = bots.create(std::move(spec));
        c.params["bot"] = bot.id;
        return success("Bot " + bot.id + " created", json(bot));
    }));

    s.Post(R"(/api/bots/([^/]+)/start)", protect(true, "bot.start", [this](Call& c) {
        const std::string id = c.req.matches[1];
        c.params["bot"] = id;
        return success("Bot " + id + " started", json(bots.start(id)));
    }));

    s.Post(R"(/api/bots/([^/]+)/stop)", protect(true, "bot.stop", [this](Call& c) {
        const std::string id = c.req.matches[1];
        c.params["bot"] = id;
        return success("Bot " + id + " stopped", json(bots.stop(id)));
    }));

    s.Delete(R"(/api/bots/([^/]+))", protect(true, "bot.delete", [this](Call& c) {
        const std::string id = c.req.matches[1];
        c.params["bot"] = id;
        bots.remove(id);
        return success("Bot " + id + " deleted");
    }));

    s.Post(R"(/api/bots/([^/]+)/simulate)", protect(true, "bot.simulate", [this](Call& c) {
        return simulate(c, c.req.matches[1]);
    }));

    s.Post("/api/commands/ping", protect(true, "command.ping", [this](Call& c) {
        return dispatch(c, engine::Ping{});
    }));

    s.Post("/api/commands/send-message", protect(true, "command.send_message", [this](Call& c) {
        const json body = c.body();
        return dispatch(c, engine::SendGreeting{string_field(body, "member"), string_field(body, "text")});
    }));

    s.Post("/api/commands/give-role", protect(true, "command.give_role", [this](Call& c) {
        const json body = c.body();
        return dispatch(c, engine::GiveRole{string_field(body, "member"), string_field(body, "role")});
    }));

    s.Post("/api/commands/clear-messages", protect(true, "command.clear_messages", [this](Call& c) {
        const json body = c.body();
        if (!body.contains("count") || !body.at("count").is_number_integer()) {
            throw Error(ErrorKind::invalid_input, "missing integer field 'count'");
        }
        return dispatch(c, engine::ClearMessages{string_field(body, "channel"), body.at("count").get<int>()});
    }));

    s.set_error_handler([this](const httplib::Request&, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) {
            cors(res);
            send(res, failure(ErrorKind::invalid_input, "unknown route"));
        }
    });

    s.set_exception_handler([this](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        cors(res);
        send(res, failure(ErrorKind::internal, what));
    });

    s.set_keep_alive_max_count(10000);
    s.set_tcp_nodelay(true);
    s.set_keep_alive_timeout(5);
    const std::size_t threads = options.threads;
    s.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
}

ApiServer::ApiServer(BotManager& bots, KeyStore& keys, AuditSink& audit, ApiOptions options)
    : impl_(std::make_unique<Impl>(bots, keys, audit, std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
    } else {
        port_ = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) {
        throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void ApiServer::run(const std::string& host, int port) {
    start(host, port);
    thread_.join();
}

void ApiServer::stop() {
    if (impl_) {
        impl_->server.stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

}  // namespace classbot::api
