#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "classbot/engine/engine.hpp"
#include "classbot/engine/runner.hpp"
#include "classbot/gateway/guild.hpp"
#include "classbot/gateway/sim_platform.hpp"
#include "classbot/store/registry.hpp"

namespace classbot::store {
class SecretsStore;
}

namespace classbot::api {

/// A started bot: its simulated platform connection, engine and runner.
/// Kept alive by whoever holds it, so a concurrent stop never pulls the
/// engine out from under a request.
struct BotSession {
    std::unique_ptr<gateway::SimPlatform> platform;
    std::unique_ptr<engine::InteractionEngine> engine;
    std::unique_ptr<engine::EngineRunner> runner;

    ~BotSession();
};

struct BotSpec {
    std::string name;
    std::string guild_id;
    BotMode mode = BotMode::development;
    gateway::GuildSpec guild;
    /// Platform token; stored in the secrets store, never in the registry.
    std::optional<std::string> token;
    std::optional<std::uint64_t> seed;
};

struct BotManagerOptions {
    Clock* clock = nullptr;
    AuditSink* audit = nullptr;
    engine::ExportSink* exports = nullptr;
    store::SecretsStore* secrets = nullptr;
    store::RegistryStore* registry = nullptr;
    engine::EngineOptions engine;
    /// pending_events and on_change are filled in per bot.
    engine::RunnerOptions runner;
    std::string server_url;
    std::chrono::milliseconds save_delay{250};
};

/// Bot instance registry and lifecycle. Instances are numbered b1, b2, ...
/// Every lifecycle change and engine change is persisted to the registry.
class BotManager {
public:
    explicit BotManager(BotManagerOptions options);
    ~BotManager();

    BotManager(const BotManager&) = delete;
    BotManager& operator=(const BotManager&) = delete;

    BotInstance create(BotSpec spec);
    /// stopped -> starting -> running. Throws invalid_input on a bad
    /// transition, not_found for an unknown id.
    BotInstance start(const std::string& id);
    BotInstance stop(const std::string& id);
    /// Stops the bot first when it is running; drops its token.
    void remove(const std::string& id);

    std::vector<BotInstance> list() const;
    BotInstance get(const std::string& id) const;

    /// The requested id, or when empty the lowest-numbered running bot (or
    /// lowest-numbered bot). Throws not_found.
    std::string resolve(const std::string& requested) const;

    /// Throws not_found for an unknown id and conflict when not running.
    std::shared_ptr<BotSession> session(const std::string& id) const;

    /// Restores bots from the registry and restarts those that were
    /// running. Returns the number of bots loaded.
    std::size_t load_registry();

    nlohmann::json registry_document() const;
    /// Saves the registry now if anything changed.
    void flush_registry();

private:
    struct Bot {
        BotInstance instance;
        gateway::GuildSpec guild;
        std::uint64_t seed = 0;
        nlohmann::json saved_engine;
        std::shared_ptr<BotSession> session;
        std::mutex lifecycle;
    };

    std::shared_ptr<Bot> find(const std::string& id) const;
    std::shared_ptr<BotSession> launch(Bot& bot);
    void changed();

    BotManagerOptions options_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Bot>> bots_;
    std::uint64_t next_index_ = 1;
    std::unique_ptr<store::DebouncedSaver> saver_;
};

/// Numeric order for ids like "b2" < "b10".
bool bot_id_less(const std::string& a, const std::string& b);

}  // namespace classbot::api
