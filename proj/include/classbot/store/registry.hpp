#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

namespace classbot::store {

/// registry.json: one JSON document rewritten atomically on every save.
class RegistryStore {
public:
    explicit RegistryStore(std::filesystem::path path);

    /// nullopt when the file does not exist. Throws Error{integrity} when it
    /// exists but is not valid JSON.
    std::optional<nlohmann::json> load() const;
    void save(const nlohmann::json& doc);

    /// Number of completed saves.
    std::uint64_t saves() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::uint64_t saves_ = 0;
};

/// Coalesces bursts of changes into one save after `delay` of quiet. The
/// snapshot callback runs on the flusher thread.
class DebouncedSaver {
public:
    DebouncedSaver(RegistryStore& store, std::function<nlohmann::json()> snapshot,
                   std::chrono::milliseconds delay = std::chrono::milliseconds(250));
    /// Saves any pending change before returning.
    ~DebouncedSaver();

    void mark_dirty();
    /// Saves now if dirty and waits for it.
    void flush();

private:
    void loop();
    void save_now();

    RegistryStore& store_;
    std::function<nlohmann::json()> snapshot_;
    std::chrono::milliseconds delay_;
    std::mutex mu_;
    std::mutex save_mu_;
    std::condition_variable cv_;
    bool dirty_ = false;
    bool stopping_ = false;
    std::chrono::steady_clock::time_point last_change_{};
    std::chrono::steady_clock::time_point dirty_since_{};
    std::thread thread_;
};

}  // namespace classbot::store
