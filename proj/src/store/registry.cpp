#include "classbot/store/registry.hpp"

#include <spdlog/spdlog.h>

#include "classbot/core/error.hpp"
#include "classbot/store/csv.hpp"

namespace classbot::store {

RegistryStore::RegistryStore(std::filesystem::path path) : path_(std::move(path)) {}

std::optional<nlohmann::json> RegistryStore::load() const {
    std::lock_guard lock(mu_);
    if (!std::filesystem::exists(path_)) {
        return std::nullopt;
    }
    try {
        return nlohmann::json::parse(read_file(path_));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::integrity, "registry " + path_.string() + " is not valid JSON: " + e.what());
    }
}

void RegistryStore::save(const nlohmann::json& doc) {
    std::lock_guard lock(mu_);
    write_file_atomic(path_, doc.dump(2) + "\n");
    ++saves_;
}

std::uint64_t RegistryStore::saves() const {
    std::lock_guard lock(mu_);
    return saves_;
}

DebouncedSaver::DebouncedSaver(RegistryStore& store, std::function<nlohmann::json()> snapshot,
                               std::chrono::milliseconds delay)
    : store_(store), snapshot_(std::move(snapshot)), delay_(delay), thread_([this] { loop(); }) {}

DebouncedSaver::~DebouncedSaver() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    thread_.join();
    flush();
}

void DebouncedSaver::mark_dirty() {
    {
        std::lock_guard lock(mu_);
        last_change_ = std::chrono::steady_clock::now();
        if (!dirty_) {
            dirty_since_ = last_change_;
        }
        dirty_ = true;
    }
    cv_.notify_all();
}

void DebouncedSaver::flush() {
    {
        std::lock_guard lock(mu_);
        if (!dirty_) {
            return;
        }
        dirty_ = false;
    }
    save_now();
}

void DebouncedSaver::save_now() {
    std::lock_guard lock(save_mu_);
    try {
        store_.save(snapshot_());
    } catch (const std::exception& e) {
        spdlog::error("registry: save failed: {}", e.what());
    }
}

void DebouncedSaver::loop() {
    std::unique_lock lock(mu_);
    for (;;) {
        cv_.wait(lock, [this] { return stopping_ || dirty_; });
        if (stopping_) {
            return;
        }
        // A steady stream of changes still gets saved every few delays.
        const auto due = std::min(last_change_ + delay_, dirty_since_ + 4 * delay_);
        if (std::chrono::steady_clock::now() < due) {
            cv_.wait_until(lock, due, [this] { return stopping_; });
            continue;
        }
        dirty_ = false;
        lock.unlock();
        save_now();
        lock.lock();
    }
}

}  // namespace classbot::store
