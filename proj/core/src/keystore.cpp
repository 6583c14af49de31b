#include "cke/keystore.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "json.hpp"

#include "cke/aes.hpp"
#include "cke/digest.hpp"
#include "cke/errors.hpp"
#include "cke/sha512.hpp"

namespace cke {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'C', 'K', 'E', 'S'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::size_t kSaltBytes = 16;
constexpr std::size_t kNonceBytes = 16;
constexpr std::size_t kMacBytes = 32;
constexpr std::size_t kHeaderBytes = sizeof(kMagic) + 1 + kSaltBytes + kNonceBytes;
constexpr unsigned kFoldIterations = 1u << 16;

[[noreturn]] void bad_store(const std::string& what) { raise(Errc::store_auth, what); }

std::array<std::uint8_t, 64> nat_to_64_be(const Nat& v) {
    std::array<std::uint8_t, 64> out{};
    std::string hex = v.to_hex();
    if (hex.size() > 128) raise(Errc::invalid_input, "store key wider than 512 bits");
    std::size_t i = out.size(); // fill bytes from the low end, nibble pairs
    bool high = false;
    for (auto it = hex.rbegin(); it != hex.rend(); ++it) {
        auto nibble = static_cast<std::uint8_t>(*it <= '9' ? *it - '0' : *it - 'a' + 10);
        if (high)
            out[i] |= static_cast<std::uint8_t>(nibble << 4);
        else
            out[--i] = nibble;
        high = !high;
    }
    return out;
}

std::array<std::uint8_t, 32> store_mac(std::span<const std::uint8_t> mac_key,
                                       std::span<const std::uint8_t> header,
                                       std::span<const std::uint8_t> ciphertext) {
    Sha512 h;
    h.update(mac_key);
    h.update(header);
    h.update(ciphertext);
    Digest full = h.finish();
    std::array<std::uint8_t, 32> mac;
    std::copy_n(full.begin(), kMacBytes, mac.begin());
    return mac;
}

json nat_json(const Nat& v) { return v.to_hex(); }
Nat nat_from(const json& j) { return Nat::from_hex(j.get<std::string>()); }

json params_json(const DomainParams& p) {
    return {{"p", nat_json(p.p)}, {"q", nat_json(p.q)}, {"g", nat_json(p.g)}, {"n", p.n}};
}

DomainParams params_from(const json& j) {
    return {nat_from(j.at("p")), nat_from(j.at("q")), nat_from(j.at("g")),
            j.at("n").get<unsigned>()};
}

std::string digest_hex(const Digest& d) {
    static const char* hexdig = "0123456789abcdef";
    std::string out;
    out.reserve(d.size() * 2);
    for (std::uint8_t b : d) {
        out.push_back(hexdig[b >> 4]);
        out.push_back(hexdig[b & 0xf]);
    }
    return out;
}

Digest digest_from_hex(const std::string& hex) {
    if (hex.size() != 128) raise(Errc::parse_error, "digest must be 128 hex chars");
    Digest d;
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto nib = [&](char c) -> unsigned {
            if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
            raise(Errc::parse_error, "bad hex digit in digest");
        };
        d[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
    }
    return d;
}

} // namespace

std::array<std::uint8_t, 64> derive_store_key(std::string_view passphrase,
                                              std::span<const std::uint8_t> salt) {
    std::vector<std::uint8_t> seed(passphrase.begin(), passphrase.end());
    seed.insert(seed.end(), salt.begin(), salt.end());
    Nat k = Nat::from_bytes_be(seed);
    for (unsigned i = 0; i < kFoldIterations; ++i) k = kdf(k, "CKE-STORE", 512);
    std::array<std::uint8_t, 64> out = nat_to_64_be(k);
    k.wipe();
    std::fill(seed.begin(), seed.end(), std::uint8_t{0});
    return out;
}

std::string encode_store_payload(const StoreData& data) {
    json j;
    j["role"] = data.role == Role::Initiator ? "along" : "busu";
    if (data.crt_pending) {
        j["crt_pending"] = {{"params", params_json(data.crt_pending->params)},
                            {"secret", nat_json(data.crt_pending->secret)},
                            {"public", nat_json(data.crt_pending->public_value)}};
    } else {
        j["crt_pending"] = nullptr;
    }
    if (data.crt) {
        j["crt"] = {{"params", params_json(data.crt->params)},
                    {"secret", nat_json(data.crt->secret)},
                    {"local_public", nat_json(data.crt->local_public)},
                    {"peer_public", nat_json(data.crt->peer_public)},
                    {"key", nat_json(data.crt->key)}};
    } else {
        j["crt"] = nullptr;
    }
    if (data.chain) {
        j["chain"] = {{"index", data.chain->index},
                      {"chain_secret", nat_json(data.chain->chain_secret)},
                      {"prev_digest", data.chain->prev_digest
                                          ? json(digest_hex(*data.chain->prev_digest))
                                          : json(nullptr)},
                      {"crt_p", nat_json(data.chain->crt_p)},
                      {"crt_g", nat_json(data.chain->crt_g)}};
    } else {
        j["chain"] = nullptr;
    }
    return j.dump();
}

StoreData decode_store_payload(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::parse_error, std::string("store payload: ") + e.what());
    }
    try {
        StoreData data;
        std::string role = j.at("role").get<std::string>();
        if (role == "along")
            data.role = Role::Initiator;
        else if (role == "busu")
            data.role = Role::Responder;
        else
            raise(Errc::parse_error, "unknown role: " + role);

        if (!j.at("crt_pending").is_null()) {
            const json& p = j["crt_pending"];
            data.crt_pending = CrtPending{params_from(p.at("params")), nat_from(p.at("secret")),
                                          nat_from(p.at("public"))};
        }
        if (!j.at("crt").is_null()) {
            const json& c = j["crt"];
            data.crt = CrtState{params_from(c.at("params")), nat_from(c.at("secret")),
                                nat_from(c.at("local_public")), nat_from(c.at("peer_public")),
                                nat_from(c.at("key"))};
        }
        if (!j.at("chain").is_null()) {
            const json& c = j["chain"];
            ChainState chain;
            chain.index = c.at("index").get<std::uint32_t>();
            chain.chain_secret = nat_from(c.at("chain_secret"));
            if (!c.at("prev_digest").is_null())
                chain.prev_digest = digest_from_hex(c["prev_digest"].get<std::string>());
            chain.crt_p = nat_from(c.at("crt_p"));
            chain.crt_g = nat_from(c.at("crt_g"));
            data.chain = chain;
        }
        return data;
    } catch (const json::exception& e) {
        raise(Errc::parse_error, std::string("store payload: ") + e.what());
    }
}

void save_store(const std::filesystem::path& path, const StoreData& data,
                std::string_view passphrase, Rng& rng) {
    std::string payload = encode_store_payload(data);

    std::array<std::uint8_t, kSaltBytes> salt;
    rng.fill(salt);
    std::array<std::uint8_t, kNonceBytes> nonce{};
    rng.fill(std::span(nonce).first(12)); // low 4 bytes stay zero: counter space

    std::array<std::uint8_t, 64> key = derive_store_key(passphrase, salt);
    std::array<std::uint8_t, 32> enc_key;
    std::copy_n(key.begin(), 32, enc_key.begin());

    std::vector<std::uint8_t> ciphertext(payload.begin(), payload.end());
    aes256_ctr_xor(enc_key, nonce, 0, ciphertext);

    std::vector<std::uint8_t> file;
    file.reserve(kHeaderBytes + ciphertext.size() + kMacBytes);
    file.insert(file.end(), kMagic, kMagic + sizeof(kMagic));
    file.push_back(kVersion);
    file.insert(file.end(), salt.begin(), salt.end());
    file.insert(file.end(), nonce.begin(), nonce.end());
    file.insert(file.end(), ciphertext.begin(), ciphertext.end());
    std::array<std::uint8_t, 32> mac =
        store_mac(std::span(key).last(32), std::span(file).first(kHeaderBytes),
                  std::span<const std::uint8_t>(ciphertext));
    file.insert(file.end(), mac.begin(), mac.end());

    std::fill(key.begin(), key.end(), std::uint8_t{0});
    std::fill(enc_key.begin(), enc_key.end(), std::uint8_t{0});
    std::fill(payload.begin(), payload.end(), '\0');

    std::filesystem::path temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::io_error, "cannot create " + temp.string());
        out.write(reinterpret_cast<const char*>(file.data()),
                  static_cast<std::streamsize>(file.size()));
        if (!out.good()) {
            std::error_code ec;
            std::filesystem::remove(temp, ec);
            raise(Errc::io_error, "write failed on " + temp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp, ec);
        raise(Errc::io_error, "cannot move " + temp.string() + " into place");
    }
}

StoreData load_store(const std::filesystem::path& path, std::string_view passphrase) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> file((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    if (file.size() < kHeaderBytes + kMacBytes) bad_store("file too short to be a key store");
    if (std::memcmp(file.data(), kMagic, sizeof(kMagic)) != 0)
        bad_store("bad magic, not a key store");
    if (file[4] != kVersion) bad_store("unsupported store version");

    std::span<const std::uint8_t> salt(file.data() + 5, kSaltBytes);
    std::span<const std::uint8_t> nonce_view(file.data() + 5 + kSaltBytes, kNonceBytes);
    std::span<const std::uint8_t> ciphertext(file.data() + kHeaderBytes,
                                             file.size() - kHeaderBytes - kMacBytes);
    std::span<const std::uint8_t> mac = std::span(file).last(kMacBytes);

    std::array<std::uint8_t, 64> key = derive_store_key(passphrase, salt);
    std::array<std::uint8_t, 32> expected =
        store_mac(std::span(key).last(32), std::span(file).first(kHeaderBytes), ciphertext);
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < kMacBytes; ++i) diff |= expected[i] ^ mac[i];
    if (diff != 0) {
        std::fill(key.begin(), key.end(), std::uint8_t{0});
        bad_store("authentication failed: wrong passphrase or corrupted file");
    }

    std::array<std::uint8_t, 32> enc_key;
    std::copy_n(key.begin(), 32, enc_key.begin());
    std::array<std::uint8_t, 16> nonce;
    std::copy(nonce_view.begin(), nonce_view.end(), nonce.begin());
    std::vector<std::uint8_t> plaintext(ciphertext.begin(), ciphertext.end());
    aes256_ctr_xor(enc_key, nonce, 0, plaintext);

    std::fill(key.begin(), key.end(), std::uint8_t{0});
    std::fill(enc_key.begin(), enc_key.end(), std::uint8_t{0});

    std::string payload(plaintext.begin(), plaintext.end());
    std::fill(plaintext.begin(), plaintext.end(), std::uint8_t{0});
    StoreData data = decode_store_payload(payload);
    std::fill(payload.begin(), payload.end(), '\0');
    return data;
}

StoreLock::StoreLock(const std::filesystem::path& store_path) {
    std::filesystem::path lock_path = store_path;
    lock_path += ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0600);
    if (fd_ < 0) raise(Errc::io_error, "cannot open " + lock_path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        raise(Errc::store_locked, lock_path.string() + " is held by another process");
    }
}

StoreLock::~StoreLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

} // namespace cke
