#include "classbot/api/bot_manager.hpp"

#include <spdlog/spdlog.h>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/store/secrets.hpp"

namespace classbot::api {

namespace {

std::uint64_t bot_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 'b' || id.find_first_not_of("0123456789", 1) != std::string::npos) {
        return 0;
    }
    return std::stoull(id.substr(1));
}

}  // namespace

bool bot_id_less(const std::string& a, const std::string& b) {
    const auto na = bot_number(a);
    const auto nb = bot_number(b);
    if (na != nb) {
        return na < nb;
    }
    return a < b;
}

BotSession::~BotSession() {
    if (platform) {
        platform->end_stream();
    }
    if (runner) {
        runner->stop();
    }
}

BotManager::BotManager(BotManagerOptions options) : options_(std::move(options)) {
    if (options_.clock == nullptr || options_.audit == nullptr) {
        throw Error(ErrorKind::internal, "bot manager needs a clock and an audit sink");
    }
    if (options_.registry != nullptr) {
        saver_ = std::make_unique<store::DebouncedSaver>(
            *options_.registry, [this] { return registry_document(); }, options_.save_delay);
    }
}

BotManager::~BotManager() {
    std::vector<std::shared_ptr<Bot>> bots;
    {
        std::lock_guard lock(mu_);
        for (const auto& [id, bot] : bots_) {
            bots.push_back(bot);
        }
    }
    // Keep the registry's notion of which bots were running, so a restart
    // brings them back.
    for (auto& bot : bots) {
        std::lock_guard life(bot->lifecycle);
        std::shared_ptr<BotSession> session;
        {
            std::lock_guard lock(mu_);
            session = std::move(bot->session);
        }
        if (session) {
            try {
                auto snap = session->runner->query([](const engine::InteractionEngine& e) { return e.snapshot(); });
                std::lock_guard lock(mu_);
                bot->saved_engine = std::move(snap);
            } catch (const std::exception& e) {
                spdlog::error("bot {}: final snapshot failed: {}", bot->instance.id, e.what());
            }
        }
    }
    if (saver_) {
        saver_->mark_dirty();
        saver_->flush();
        saver_.reset();
    }
}

std::shared_ptr<BotManager::Bot> BotManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = bots_.find(id);
    if (it == bots_.end()) {
        throw Error(ErrorKind::not_found, "unknown id: bot " + id);
    }
    return it->second;
}

void BotManager::changed() {
    if (saver_) {
        saver_->mark_dirty();
    }
}

BotInstance BotManager::create(BotSpec spec) {
    if (spec.name.empty()) {
        throw Error(ErrorKind::invalid_input, "bot name is empty");
    }
    spec.guild.validate();
    auto bot = std::make_shared<Bot>();
    {
        std::lock_guard lock(mu_);
        const std::uint64_t n = next_index_++;
        bot->instance.id = "b" + std::to_string(n);
        bot->seed = spec.seed.value_or(n);
    }
    bot->instance.name = spec.name;
    bot->instance.token_ref = token_ref_for(bot->instance.id);
    bot->instance.guild_id = spec.guild_id.empty() ? spec.guild.guild_id : spec.guild_id;
    spec.guild.guild_id = bot->instance.guild_id;
    bot->instance.mode = spec.mode;
    bot->instance.state = BotState::stopped;
    bot->instance.created_at = options_.clock->now();
    bot->guild = std::move(spec.guild);
    if (spec.token && !spec.token->empty()) {
        if (options_.secrets == nullptr) {
            throw Error(ErrorKind::unavailable, "no secrets store configured for bot tokens");
        }
        options_.secrets->put(bot->instance.token_ref, *spec.token);
    }
    BotInstance out = bot->instance;
    {
        std::lock_guard lock(mu_);
        bots_[out.id] = std::move(bot);
    }
    changed();
    return out;
}

std::shared_ptr<BotSession> BotManager::launch(Bot& bot) {
    auto session = std::make_shared<BotSession>();
    session->platform = std::make_unique<gateway::SimPlatform>(bot.guild, bot.seed, *options_.clock);
    engine::EngineOptions eopts = options_.engine;
    eopts.code_seed ^= bot.seed * 0x9e3779b97f4a7c15ULL;
    session->engine = std::make_unique<engine::InteractionEngine>(bot.instance.id, *session->platform,
                                                                  *options_.clock, *options_.audit,
                                                                  options_.exports, eopts);
    engine::EngineContext ctx;
    ctx.server_url = options_.server_url;
    ctx.api_token_ref = bot.instance.token_ref;
    ctx.guild_id = bot.instance.guild_id;
    ctx.default_channels = bot.guild.default_channels;
    ctx.admin_role_id = bot.guild.admin_role_id;
    ctx.runtime_flags["mode"] = bot.instance.mode == BotMode::development ? "development" : "production";
    session->engine->initialize(std::move(ctx), bot.guild.groups);
    if (!bot.saved_engine.is_null()) {
        session->engine->restore(bot.saved_engine);
    }
    engine::RunnerOptions ropts = options_.runner;
    auto* platform = session->platform.get();
    ropts.pending_events = [platform] { return platform->pending_events(); };
    ropts.on_change = [this] { changed(); };
    session->runner = std::make_unique<engine::EngineRunner>(*session->engine, *session->platform, *options_.clock,
                                                             *options_.audit, std::move(ropts));
    session->runner->start();
    return session;
}

BotInstance BotManager::start(const std::string& id) {
    auto bot = find(id);
    std::lock_guard life(bot->lifecycle);
    {
        std::lock_guard lock(mu_);
        bot->instance.transition_to(BotState::starting);
    }
    std::shared_ptr<BotSession> session;
    try {
        session = launch(*bot);
    } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        bot->instance.transition_to(BotState::error);
        bot->instance.transition_to(BotState::stopped);
        changed();
        throw Error(ErrorKind::internal, "bot " + id + " failed to start: " + e.what());
    }
    BotInstance out;
    {
        std::lock_guard lock(mu_);
        bot->session = std::move(session);
        bot->instance.transition_to(BotState::running);
        out = bot->instance;
    }
    changed();
    return out;
}

BotInstance BotManager::stop(const std::string& id) {
    auto bot = find(id);
    std::lock_guard life(bot->lifecycle);
    std::shared_ptr<BotSession> session;
    {
        std::lock_guard lock(mu_);
        if (bot->instance.state != BotState::running) {
            bot->instance.transition_to(BotState::stopped);  // throws for a bad transition
        }
        session = bot->session;
    }
    if (session) {
        try {
            auto snap = session->runner->query([](const engine::InteractionEngine& e) { return e.snapshot(); });
            std::lock_guard lock(mu_);
            bot->saved_engine = std::move(snap);
        } catch (const std::exception& e) {
            spdlog::error("bot {}: snapshot on stop failed: {}", id, e.what());
        }
    }
    BotInstance out;
    {
        std::lock_guard lock(mu_);
        bot->session.reset();
        if (bot->instance.state == BotState::running) {
            bot->instance.transition_to(BotState::stopped);
        }
        out = bot->instance;
    }
    session.reset();
    changed();
    return out;
}

void BotManager::remove(const std::string& id) {
    auto bot = find(id);
    if (bot->instance.state == BotState::running) {
        stop(id);
    }
    {
        std::lock_guard life(bot->lifecycle);
        std::lock_guard lock(mu_);
        bots_.erase(id);
    }
    if (options_.secrets != nullptr) {
        options_.secrets->erase(bot->instance.token_ref);
    }
    changed();
}

std::vector<BotInstance> BotManager::list() const {
    std::lock_guard lock(mu_);
    std::vector<BotInstance> out;
    for (const auto& [id, bot] : bots_) {
        out.push_back(bot->instance);
    }
    std::sort(out.begin(), out.end(), [](const BotInstance& a, const BotInstance& b) { return bot_id_less(a.id, b.id); });
    return out;
}

BotInstance BotManager::get(const std::string& id) const {
    auto bot = find(id);
    std::lock_guard lock(mu_);
    return bot->instance;
}

std::string BotManager::resolve(const std::string& requested) const {
    if (!requested.empty()) {
        find(requested);
        return requested;
    }
    const auto bots = list();
    if (bots.empty()) {
        throw Error(ErrorKind::not_found, "no bot is configured");
    }
    for (const auto& b : bots) {
        if (b.state == BotState::running) {
            return b.id;
        }
    }
    return bots.front().id;
}

std::shared_ptr<BotSession> BotManager::session(const std::string& id) const {
    auto bot = find(id);
    std::lock_guard lock(mu_);
    if (!bot->session) {
        throw Error(ErrorKind::conflict, "bot " + id + " is not running");
    }
    return bot->session;
}

nlohmann::json BotManager::registry_document() const {
    struct Entry {
        BotInstance instance;
        gateway::GuildSpec guild;
        std::uint64_t seed;
        nlohmann::json saved;
        std::shared_ptr<BotSession> session;
    };
    std::vector<Entry> entries;
    std::uint64_t next_index = 0;
    {
        std::lock_guard lock(mu_);
        next_index = next_index_;
        for (const auto& [id, bot] : bots_) {
            entries.push_back({bot->instance, bot->guild, bot->seed, bot->saved_engine, bot->session});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return bot_id_less(a.instance.id, b.instance.id); });
    nlohmann::json bots = nlohmann::json::array();
    for (auto& e : entries) {
        nlohmann::json state = std::move(e.saved);
        if (e.session) {
            try {
                state = e.session->runner->query([](const engine::InteractionEngine& en) { return en.snapshot(); });
            } catch (const std::exception&) {
                // Stopping right now; the last saved state is still accurate.
            }
        }
        bots.push_back({{"instance", e.instance}, {"guild", gateway::guild_to_json(e.guild)}, {"seed", e.seed},
                        {"engine", std::move(state)}});
    }
    return {{"version", 1}, {"next_bot_index", next_index}, {"bots", std::move(bots)}};
}

void BotManager::flush_registry() {
    if (saver_) {
        saver_->flush();
    }
}

std::size_t BotManager::load_registry() {
    if (options_.registry == nullptr) {
        return 0;
    }
    const auto doc = options_.registry->load();
    if (!doc) {
        return 0;
    }
    std::vector<std::string> restart;
    std::size_t loaded = 0;
    try {
        std::lock_guard lock(mu_);
        next_index_ = std::max<std::uint64_t>(next_index_, doc->value("next_bot_index", std::uint64_t{1}));
        for (const auto& b : doc->at("bots")) {
            auto bot = std::make_shared<Bot>();
            bot->instance = b.at("instance").get<BotInstance>();
            bot->guild = gateway::guild_from_json(b.at("guild"));
            bot->seed = b.value("seed", std::uint64_t{1});
            bot->saved_engine = b.value("engine", nlohmann::json());
            if (bot->instance.state == BotState::running || bot->instance.state == BotState::starting) {
                restart.push_back(bot->instance.id);
            }
            bot->instance.state = BotState::stopped;
            next_index_ = std::max(next_index_, bot_number(bot->instance.id) + 1);
            bots_[bot->instance.id] = std::move(bot);
            ++loaded;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::integrity, std::string("registry is malformed: ") + e.what());
    }
    for (const auto& id : restart) {
        try {
            start(id);
        } catch (const std::exception& e) {
            spdlog::error("bot {}: restart from registry failed: {}", id, e.what());
        }
    }
    return loaded;
}

}  // namespace classbot::api
