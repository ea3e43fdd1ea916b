#include "classbot/api/auth.hpp"

#include <sodium.h>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/store/secrets.hpp"

namespace classbot::api {

namespace {

constexpr const char* kPrefix = "apikey:";

std::string hex(const unsigned char* data, std::size_t n) {
    std::string out(n * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), data, n);
    out.pop_back();
    return out;
}

bool valid_key_id(const std::string& id) {
    if (id.empty() || id.size() > 32) {
        return false;
    }
    for (char c : id) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) {
            return false;
        }
    }
    return true;
}

/// key_id embedded in "cb_<key_id>_<secret>".
std::optional<std::string> key_id_of(std::string_view raw) {
    if (raw.substr(0, 3) != "cb_") {
        return std::nullopt;
    }
    const auto sep = raw.find('_', 3);
    if (sep == std::string_view::npos || sep == 3) {
        return std::nullopt;
    }
    return std::string(raw.substr(3, sep - 3));
}

json key_to_json(const ApiKey& k) {
    return {{"key_id", k.key_id}, {"secret_hash", k.secret_hash}, {"label", k.label}, {"enabled", k.enabled}};
}

ApiKey key_from_json(const json& j) {
    return ApiKey{j.at("key_id").get<std::string>(), j.at("secret_hash").get<std::string>(),
                  j.value("label", std::string{}), j.value("enabled", true)};
}

void digest(std::string_view raw, const unsigned char* salt, unsigned char* out) {
    crypto_generichash(out, crypto_generichash_BYTES, reinterpret_cast<const unsigned char*>(raw.data()), raw.size(),
                       salt, 16);
}

}  // namespace

std::string hash_api_key(std::string_view raw) {
    if (sodium_init() < 0) {
        throw Error(ErrorKind::internal, "libsodium failed to initialize");
    }
    unsigned char salt[16];
    randombytes_buf(salt, sizeof salt);
    unsigned char out[crypto_generichash_BYTES];
    digest(raw, salt, out);
    return hex(salt, sizeof salt) + "$" + hex(out, sizeof out);
}

bool verify_api_key(std::string_view raw, const std::string& secret_hash) {
    const auto dollar = secret_hash.find('$');
    if (dollar != 32 || secret_hash.size() != 33 + 2 * crypto_generichash_BYTES) {
        return false;
    }
    unsigned char salt[16];
    unsigned char expected[crypto_generichash_BYTES];
    std::size_t len = 0;
    if (sodium_hex2bin(salt, sizeof salt, secret_hash.data(), 32, nullptr, &len, nullptr) != 0 || len != 16) {
        return false;
    }
    if (sodium_hex2bin(expected, sizeof expected, secret_hash.data() + 33, secret_hash.size() - 33, nullptr, &len,
                       nullptr) != 0 ||
        len != sizeof expected) {
        return false;
    }
    unsigned char actual[crypto_generichash_BYTES];
    digest(raw, salt, actual);
    return sodium_memcmp(actual, expected, sizeof actual) == 0;
}

KeyStore::KeyStore(store::SecretsStore* secrets) : secrets_(secrets) {
    if (secrets_ == nullptr) {
        return;
    }
    for (const auto& [name, value] : secrets_->with_prefix(kPrefix)) {
        try {
            ApiKey key = key_from_json(json::parse(value));
            keys_[key.key_id] = std::move(key);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::integrity, "secrets entry " + name + " is malformed: " + e.what());
        }
    }
}

std::string KeyStore::create(const std::string& key_id, const std::string& label) {
    if (!valid_key_id(key_id)) {
        throw Error(ErrorKind::invalid_input, "key id must be 1-32 characters of a-z, 0-9 or '-'");
    }
    if (sodium_init() < 0) {
        throw Error(ErrorKind::internal, "libsodium failed to initialize");
    }
    unsigned char secret[24];
    randombytes_buf(secret, sizeof secret);
    const std::string raw = "cb_" + key_id + "_" + hex(secret, sizeof secret);
    ApiKey key{key_id, hash_api_key(raw), label, true};

    std::lock_guard lock(mu_);
    if (keys_.contains(key_id)) {
        throw Error(ErrorKind::conflict, "key id '" + key_id + "' already exists");
    }
    persist(key);
    keys_[key_id] = std::move(key);
    return raw;
}

std::optional<ApiKey> KeyStore::authenticate(std::string_view raw) const {
    const auto id = key_id_of(raw);
    if (!id) {
        return std::nullopt;
    }
    std::lock_guard lock(mu_);
    auto it = keys_.find(*id);
    if (it == keys_.end() || !it->second.enabled || !verify_api_key(raw, it->second.secret_hash)) {
        return std::nullopt;
    }
    return it->second;
}

void KeyStore::set_enabled(const std::string& key_id, bool enabled) {
    std::lock_guard lock(mu_);
    auto it = keys_.find(key_id);
    if (it == keys_.end()) {
        throw Error(ErrorKind::not_found, "unknown id: key " + key_id);
    }
    it->second.enabled = enabled;
    persist(it->second);
}

bool KeyStore::remove(const std::string& key_id) {
    std::lock_guard lock(mu_);
    if (keys_.erase(key_id) == 0) {
        return false;
    }
    if (secrets_ != nullptr) {
        secrets_->erase(kPrefix + key_id);
    }
    return true;
}

std::vector<ApiKey> KeyStore::list() const {
    std::lock_guard lock(mu_);
    std::vector<ApiKey> out;
    for (const auto& [id, k] : keys_) {
        out.push_back(k);
    }
    return out;
}

void KeyStore::persist(const ApiKey& key) {
    if (secrets_ != nullptr) {
        secrets_->put(kPrefix + key.key_id, key_to_json(key).dump());
    }
}

RateLimiter::RateLimiter(const Clock& clock, std::size_t limit, std::chrono::milliseconds window)
    : clock_(clock), limit_(limit), window_(window) {}

bool RateLimiter::allow(const std::string& key_id) {
    const auto now = clock_.monotonic();
    std::lock_guard lock(mu_);
    auto& q = hits_[key_id];
    while (!q.empty() && now - q.front() >= window_) {
        q.pop_front();
    }
    if (q.size() >= limit_) {
        return false;
    }
    q.push_back(now);
    return true;
}

}  // namespace classbot::api
