// classbotd: the REST server plus API-key administration.
//
//   classbotd serve [--bind host:port] [--data-dir DIR]
//   classbotd key add ID [--label TEXT]
//   classbotd key list
//   classbotd key disable ID | enable ID | remove ID
//
// Environment: CLASSBOT_BIND, CLASSBOT_DATA_DIR, CLASSBOT_SECRETS,
// CLASSBOT_SECRETS_PASSPHRASE, CLASSBOT_CONSOLE_ORIGIN.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "classbot/api/server.hpp"
#include "classbot/store/audit_log.hpp"
#include "classbot/store/exporter.hpp"
#include "classbot/store/secrets.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::unique_ptr<classbot::store::SecretsStore> open_secrets(const classbot::api::ServerConfig& config) {
    if (config.passphrase.empty()) {
        throw classbot::Error(classbot::ErrorKind::invalid_input, "CLASSBOT_SECRETS_PASSPHRASE is not set");
    }
    return std::make_unique<classbot::store::SecretsStore>(config.secrets_file(), config.passphrase);
}

int serve(classbot::api::ServerConfig config) {
    using namespace classbot;
    auto secrets = open_secrets(config);
    api::KeyStore keys(secrets.get());
    if (keys.list().empty()) {
        spdlog::warn("no API keys yet; create one with 'classbotd key add <id>'");
    }
    SystemClock clock;
    store::AuditLog audit(config.data_dir / "logs");
    store::CsvExporter exporter(config.data_dir);
    store::RegistryStore registry(config.data_dir / "registry.json");

    api::BotManagerOptions opts;
    opts.clock = &clock;
    opts.audit = &audit;
    opts.exports = &exporter;
    opts.secrets = secrets.get();
    opts.registry = &registry;
    opts.server_url = "http://" + config.host + ":" + std::to_string(config.port);
    api::BotManager bots(opts);
    const std::size_t loaded = bots.load_registry();
    if (loaded == 0) {
        api::BotSpec spec;
        spec.name = "default";
        spec.guild = gateway::GuildSpec::classroom(30);
        const auto bot = bots.create(std::move(spec));
        bots.start(bot.id);
        spdlog::info("created and started default bot {}", bot.id);
    } else {
        spdlog::info("restored {} bot(s) from {}", loaded, registry.path().string());
    }

    api::ApiOptions api_opts;
    api_opts.console_origin = config.console_origin;
    api::ApiServer server(bots, keys, audit, api_opts);
    const int port = server.start(config.host, config.port);
    spdlog::info("listening on {}:{}", config.host, port);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    spdlog::info("shutting down");
    server.stop();
    bots.flush_registry();
    audit.flush();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"classbot server"};
    app.require_subcommand(1);

    std::string bind;
    std::string data_dir;
    auto* serve_cmd = app.add_subcommand("serve", "run the REST server");
    serve_cmd->add_option("--bind", bind, "host:port (overrides CLASSBOT_BIND)");
    serve_cmd->add_option("--data-dir", data_dir, "data root (overrides CLASSBOT_DATA_DIR)");

    auto* key_cmd = app.add_subcommand("key", "manage API keys");
    key_cmd->require_subcommand(1);
    std::string key_id;
    std::string label;
    auto* key_add = key_cmd->add_subcommand("add", "create a key and print it once");
    key_add->add_option("id", key_id, "key id ([a-z0-9-], up to 32 chars)")->required();
    key_add->add_option("--label", label, "free-form label");
    auto* key_list = key_cmd->add_subcommand("list", "list keys");
    auto* key_disable = key_cmd->add_subcommand("disable", "disable a key");
    key_disable->add_option("id", key_id)->required();
    auto* key_enable = key_cmd->add_subcommand("enable", "enable a key");
    key_enable->add_option("id", key_id)->required();
    auto* key_remove = key_cmd->add_subcommand("remove", "delete a key");
    key_remove->add_option("id", key_id)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!bind.empty()) {
            ::setenv("CLASSBOT_BIND", bind.c_str(), 1);
        }
        if (!data_dir.empty()) {
            ::setenv("CLASSBOT_DATA_DIR", data_dir.c_str(), 1);
        }
        auto config = classbot::api::ServerConfig::from_env();
        if (*serve_cmd) {
            return serve(config);
        }
        auto secrets = open_secrets(config);
        classbot::api::KeyStore keys(secrets.get());
        if (*key_add) {
            std::printf("%s\n", keys.create(key_id, label.empty() ? key_id : label).c_str());
        } else if (*key_list) {
            for (const auto& k : keys.list()) {
                std::printf("%-32s  %-8s  %s\n", k.key_id.c_str(), k.enabled ? "enabled" : "disabled", k.label.c_str());
            }
        } else if (*key_disable || *key_enable) {
            keys.set_enabled(key_id, key_enable->parsed());
        } else if (*key_remove) {
            if (!keys.remove(key_id)) {
                std::fprintf(stderr, "no key '%s'\n", key_id.c_str());
                return 1;
            }
        }
        return 0;
    } catch (const classbot::Error& e) {
        std::fprintf(stderr, "classbotd: %s\n", e.what());
        return e.kind() == classbot::ErrorKind::invalid_input ? 2 : 1;
    }
}
