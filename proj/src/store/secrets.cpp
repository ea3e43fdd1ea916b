#include "classbot/store/secrets.hpp"

#include <vector>

#include <sodium.h>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"
#include "classbot/store/csv.hpp"

namespace classbot::store {

namespace {

using Bytes = std::vector<unsigned char>;

constexpr const char* kFormat = "classbot-secrets";
constexpr const char* kKdfAlg = "argon2id13";
constexpr const char* kCipher = "xchacha20poly1305-ietf";
constexpr const char* kKeyCheckContext = "classbot secrets key check v1";

void ensure_sodium() {
    if (sodium_init() < 0) {
        throw Error(ErrorKind::internal, "libsodium failed to initialize");
    }
}

std::string to_hex(const Bytes& b) {
    std::string out(b.size() * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), b.data(), b.size());
    out.pop_back();
    return out;
}

Bytes from_hex(const std::string& hex, const char* field) {
    // to_hex writes lowercase only; anything else is damage
    if (hex.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw Error(ErrorKind::integrity, std::string("secrets file is corrupted (bad ") + field + ")");
    }
    Bytes out(hex.size() / 2 + 1);
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr, &len, &end) != 0 ||
        end != hex.data() + hex.size()) {
        throw Error(ErrorKind::integrity, std::string("secrets file is corrupted (bad ") + field + ")");
    }
    out.resize(len);
    return out;
}

struct Sealed {
    KdfParams params;
    Bytes salt;
    Bytes nonce;
    Bytes key_check;
    Bytes ciphertext;
};

/// Covers everything except the checksum itself, in a fixed order.
Bytes checksum_of(const Sealed& s) {
    const std::string header = std::string(kFormat) + "|" + std::to_string(s.params.opslimit) + "|" +
                               std::to_string(s.params.memlimit) + "|";
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, crypto_generichash_BYTES);
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(header.data()), header.size());
    for (const Bytes* part : {&s.salt, &s.nonce, &s.key_check, &s.ciphertext}) {
        const auto len = static_cast<std::uint64_t>(part->size());
        crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(&len), sizeof len);
        crypto_generichash_update(&st, part->data(), part->size());
    }
    Bytes out(crypto_generichash_BYTES);
    crypto_generichash_final(&st, out.data(), out.size());
    return out;
}

Bytes derive_key(const std::string& passphrase, const Bytes& salt, KdfParams params) {
    Bytes key(crypto_aead_xchacha20poly1305_ietf_KEYBYTES);
    if (salt.size() != crypto_pwhash_SALTBYTES) {
        throw Error(ErrorKind::integrity, "secrets file is corrupted (salt length)");
    }
    if (params.opslimit < crypto_pwhash_OPSLIMIT_MIN || params.opslimit > crypto_pwhash_OPSLIMIT_MAX ||
        params.memlimit < crypto_pwhash_MEMLIMIT_MIN || params.memlimit > crypto_pwhash_MEMLIMIT_MAX) {
        throw Error(ErrorKind::integrity, "secrets file is corrupted (kdf parameters)");
    }
    if (crypto_pwhash(key.data(), key.size(), passphrase.data(), passphrase.size(), salt.data(), params.opslimit,
                      params.memlimit, crypto_pwhash_ALG_ARGON2ID13) != 0) {
        throw Error(ErrorKind::internal, "key derivation ran out of memory");
    }
    return key;
}

Bytes key_check_of(const Bytes& key) {
    Bytes out(crypto_generichash_BYTES);
    crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(kKeyCheckContext),
                       std::char_traits<char>::length(kKeyCheckContext), key.data(), key.size());
    return out;
}

std::string associated_data(const Sealed& s) {
    return std::string(kFormat) + "|" + to_hex(s.salt) + "|" + std::to_string(s.params.opslimit) + "|" +
           std::to_string(s.params.memlimit);
}

}  // namespace

KdfParams KdfParams::interactive() {
    return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

KdfParams KdfParams::minimum() { return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN}; }

void save_secrets(const std::filesystem::path& path, const SecretsFile& secrets, const std::string& passphrase,
                  KdfParams params) {
    ensure_sodium();
    if (passphrase.empty()) {
        throw Error(ErrorKind::invalid_input, "secrets passphrase is empty");
    }
    Sealed s{params, Bytes(crypto_pwhash_SALTBYTES), Bytes(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES), {}, {}};
    randombytes_buf(s.salt.data(), s.salt.size());
    randombytes_buf(s.nonce.data(), s.nonce.size());
    Bytes key = derive_key(passphrase, s.salt, params);
    s.key_check = key_check_of(key);

    std::string plain = json{{"version", secrets.version}, {"entries", secrets.entries}}.dump();
    const std::string ad = associated_data(s);
    s.ciphertext.resize(plain.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES);
    unsigned long long clen = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(s.ciphertext.data(), &clen,
                                               reinterpret_cast<const unsigned char*>(plain.data()), plain.size(),
                                               reinterpret_cast<const unsigned char*>(ad.data()), ad.size(), nullptr,
                                               s.nonce.data(), key.data());
    s.ciphertext.resize(clen);
    sodium_memzero(plain.data(), plain.size());
    sodium_memzero(key.data(), key.size());

    const json doc{{"format", kFormat},
                   {"version", 1},
                   {"kdf",
                    {{"alg", kKdfAlg},
                     {"opslimit", s.params.opslimit},
                     {"memlimit", s.params.memlimit},
                     {"salt", to_hex(s.salt)}}},
                   {"cipher", kCipher},
                   {"nonce", to_hex(s.nonce)},
                   {"key_check", to_hex(s.key_check)},
                   {"ciphertext", to_hex(s.ciphertext)},
                   {"checksum", to_hex(checksum_of(s))}};
    write_file_atomic(path, doc.dump(2) + "\n");
}

SecretsFile load_secrets(const std::filesystem::path& path, const std::string& passphrase) {
    ensure_sodium();
    const std::string text = read_file(path);
    Sealed s{};
    Bytes checksum;
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != kFormat) {
            throw Error(ErrorKind::integrity, "secrets file is corrupted (unknown format)");
        }
        const json& kdf = doc.at("kdf");
        if (doc.at("version").get<int>() != 1 || kdf.at("alg").get<std::string>() != kKdfAlg ||
            doc.at("cipher").get<std::string>() != kCipher) {
            throw Error(ErrorKind::integrity, "secrets file is corrupted (unsupported version or algorithm)");
        }
        s.params.opslimit = kdf.at("opslimit").get<unsigned long long>();
        s.params.memlimit = kdf.at("memlimit").get<std::size_t>();
        s.salt = from_hex(kdf.at("salt").get<std::string>(), "salt");
        s.nonce = from_hex(doc.at("nonce").get<std::string>(), "nonce");
        s.key_check = from_hex(doc.at("key_check").get<std::string>(), "key_check");
        s.ciphertext = from_hex(doc.at("ciphertext").get<std::string>(), "ciphertext");
        checksum = from_hex(doc.at("checksum").get<std::string>(), "checksum");
    } catch (const json::exception& e) {
        throw Error(ErrorKind::integrity, std::string("secrets file is corrupted (") + e.what() + ")");
    }
    const Bytes expected = checksum_of(s);
    if (checksum.size() != expected.size() || sodium_memcmp(checksum.data(), expected.data(), expected.size()) != 0) {
        throw Error(ErrorKind::integrity, "secrets file is corrupted (checksum mismatch)");
    }
    if (s.nonce.size() != crypto_aead_xchacha20poly1305_ietf_NPUBBYTES ||
        s.ciphertext.size() < crypto_aead_xchacha20poly1305_ietf_ABYTES) {
        throw Error(ErrorKind::integrity, "secrets file is corrupted (field length)");
    }

    Bytes key = derive_key(passphrase, s.salt, s.params);
    const Bytes check = key_check_of(key);
    if (check.size() != s.key_check.size() || sodium_memcmp(check.data(), s.key_check.data(), check.size()) != 0) {
        sodium_memzero(key.data(), key.size());
        throw Error(ErrorKind::authentication, "wrong passphrase for secrets file");
    }
    const std::string ad = associated_data(s);
    std::string plain(s.ciphertext.size() - crypto_aead_xchacha20poly1305_ietf_ABYTES, '\0');
    unsigned long long plen = 0;
    const int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
        reinterpret_cast<unsigned char*>(plain.data()), &plen, nullptr, s.ciphertext.data(), s.ciphertext.size(),
        reinterpret_cast<const unsigned char*>(ad.data()), ad.size(), s.nonce.data(), key.data());
    sodium_memzero(key.data(), key.size());
    if (rc != 0) {
        throw Error(ErrorKind::integrity, "secrets file is corrupted (decryption failed)");
    }
    plain.resize(plen);

    SecretsFile out;
    try {
        const json doc = json::parse(plain);
        out.version = doc.at("version").get<int>();
        out.entries = doc.at("entries").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        sodium_memzero(plain.data(), plain.size());
        throw Error(ErrorKind::integrity, std::string("secrets file is corrupted (payload: ") + e.what() + ")");
    }
    sodium_memzero(plain.data(), plain.size());
    return out;
}

SecretsStore::SecretsStore(std::filesystem::path path, std::string passphrase, KdfParams params)
    : path_(std::move(path)), passphrase_(std::move(passphrase)), params_(params) {
    if (passphrase_.empty()) {
        throw Error(ErrorKind::invalid_input, "secrets passphrase is empty");
    }
    if (std::filesystem::exists(path_)) {
        file_ = load_secrets(path_, passphrase_);
    }
}

std::optional<std::string> SecretsStore::get(const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = file_.entries.find(name);
    if (it == file_.entries.end()) {
        return std::nullopt;
    }
    return it->second;
}

void SecretsStore::put(const std::string& name, std::string value) {
    std::lock_guard lock(mu_);
    file_.entries[name] = std::move(value);
    save_locked();
}

bool SecretsStore::erase(const std::string& name) {
    std::lock_guard lock(mu_);
    if (file_.entries.erase(name) == 0) {
        return false;
    }
    save_locked();
    return true;
}

std::map<std::string, std::string> SecretsStore::with_prefix(const std::string& prefix) const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::string> out;
    for (auto it = file_.entries.lower_bound(prefix); it != file_.entries.end() && it->first.rfind(prefix, 0) == 0;
         ++it) {
        out.insert(*it);
    }
    return out;
}

void SecretsStore::save_locked() { save_secrets(path_, file_, passphrase_, params_); }

}  // namespace classbot::store
