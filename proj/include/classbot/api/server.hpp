#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include <json.hpp>

#include "classbot/api/auth.hpp"
#include "classbot/api/bot_manager.hpp"
#include "classbot/core/error.hpp"

namespace classbot::api {

/// Settings read from the environment:
///   CLASSBOT_BIND             host:port (default 127.0.0.1:8080)
///   CLASSBOT_DATA_DIR         data root (default ".")
///   CLASSBOT_SECRETS          secrets file (default <data>/.secrets.json)
///   CLASSBOT_SECRETS_PASSPHRASE
///   CLASSBOT_CONSOLE_ORIGIN   CORS origin (default http://localhost:5173)
struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = ".";
    std::filesystem::path secrets_path;
    std::string passphrase;
    std::string console_origin = "http://localhost:5173";

    static ServerConfig from_env();
    std::filesystem::path secrets_file() const;
};

/// HTTP status for an error kind: validation, lookup and state conflicts
/// are 400, authentication 403, rate limiting 429, everything else 500.
int http_status_for(ErrorKind kind);

/// {"status":"success"|"error","message":...,"data":...}; data omitted
/// when null.
nlohmann::json api_response(bool ok, const std::string& message, const nlohmann::json& data = nullptr);

struct ApiOptions {
    std::string console_origin = "http://localhost:5173";
    /// Rate limit per key.
    std::size_t rate_limit = 30;
    std::chrono::milliseconds rate_window{10000};
    /// Clock for the rate limiter; the system clock when null.
    const Clock* limiter_clock = nullptr;
    std::size_t threads = 16;
    /// How long the simulate endpoint waits for the engine to settle.
    std::chrono::milliseconds settle_timeout{5000};
};

/// The instructor-facing REST service. Order of checks on every protected
/// route: bearer key (403), rate limit (429), then request validation (400).
class ApiServer {
public:
    ApiServer(BotManager& bots, KeyStore& keys, AuditSink& audit, ApiOptions options = {});
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port. Throws Error{io} when binding fails.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace classbot::api
