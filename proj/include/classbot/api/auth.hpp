#pragma once

#include <chrono>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "classbot/core/time.hpp"
#include "classbot/core/types.hpp"

namespace classbot::store {
class SecretsStore;
}

namespace classbot::api {

/// Flat API keys. A raw key looks like "cb_<key_id>_<secret>"; only a salted
/// BLAKE2b digest of it is kept, in the secrets store under
/// "apikey:<key_id>" (or in memory when no store is given).
class KeyStore {
public:
    explicit KeyStore(store::SecretsStore* secrets = nullptr);

    /// Returns the raw key; it cannot be recovered later. key_id must be
    /// 1-32 chars of [a-z0-9-]. Throws invalid_input or conflict.
    std::string create(const std::string& key_id, const std::string& label);

    /// The enabled key matching the raw string, if any. Constant-time
    /// digest comparison.
    std::optional<ApiKey> authenticate(std::string_view raw) const;

    void set_enabled(const std::string& key_id, bool enabled);
    bool remove(const std::string& key_id);
    std::vector<ApiKey> list() const;

private:
    void persist(const ApiKey& key);

    store::SecretsStore* secrets_;
    mutable std::mutex mu_;
    std::map<std::string, ApiKey> keys_;
};

/// Hashes a raw key as "<salt-hex>$<digest-hex>" with a fresh salt.
std::string hash_api_key(std::string_view raw);
bool verify_api_key(std::string_view raw, const std::string& secret_hash);

/// Sliding-window limiter: at most `limit` requests per key in any window.
class RateLimiter {
public:
    RateLimiter(const Clock& clock, std::size_t limit = 30, std::chrono::milliseconds window = std::chrono::seconds(10));

    /// Records the request and returns true when it is within the limit.
    /// Rejected requests are not recorded.
    bool allow(const std::string& key_id);

    std::size_t limit() const { return limit_; }

private:
    const Clock& clock_;
    std::size_t limit_;
    std::chrono::microseconds window_;
    std::mutex mu_;
    std::map<std::string, std::deque<std::chrono::microseconds>> hits_;
};

}  // namespace classbot::api
