#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace classbot::store {

struct SecretsFile {
    int version = 1;
    /// "apikey:<key_id>" -> key record JSON, "bot-token:<bot_id>" -> token, ...
    std::map<std::string, std::string> entries;

    bool operator==(const SecretsFile&) const = default;
};

/// Argon2id cost. Stored in the file so a file written with one setting
/// can be read back by any build.
struct KdfParams {
    unsigned long long opslimit;
    std::size_t memlimit;

    static KdfParams interactive();
    /// The library minimum; fast enough for unit tests.
    static KdfParams minimum();
};

/// Encrypts with XChaCha20-Poly1305 under an Argon2id key; fresh salt and
/// nonce on every save. Written atomically. Throws Error{io} or
/// Error{invalid_input} for an empty passphrase.
void save_secrets(const std::filesystem::path& path, const SecretsFile& secrets, const std::string& passphrase,
                  KdfParams params = KdfParams::interactive());

/// Throws Error{authentication} for a wrong passphrase, Error{integrity}
/// when the file is corrupted or tampered with, Error{io} when missing.
SecretsFile load_secrets(const std::filesystem::path& path, const std::string& passphrase);

/// Thread-safe cache over an encrypted secrets file. Every mutation is
/// saved before it returns.
class SecretsStore {
public:
    /// Loads the file if it exists; otherwise starts empty and creates it on
    /// the first write.
    SecretsStore(std::filesystem::path path, std::string passphrase, KdfParams params = KdfParams::interactive());

    std::optional<std::string> get(const std::string& name) const;
    void put(const std::string& name, std::string value);
    bool erase(const std::string& name);
    /// Entries whose name starts with prefix.
    std::map<std::string, std::string> with_prefix(const std::string& prefix) const;

    const std::filesystem::path& path() const { return path_; }

private:
    void save_locked();

    std::filesystem::path path_;
    std::string passphrase_;
    KdfParams params_;
    mutable std::mutex mu_;
    SecretsFile file_;
};

}  // namespace classbot::store
