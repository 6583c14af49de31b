#pragma once

// Encrypted on-disk peer state. The file stands in for the tamper-resistant
// storage a deployed device would have: everything sensitive is encrypted
// under a passphrase-derived key and authenticated as a whole, so a wrong
// passphrase and a corrupted file are the same observable failure and no
// partial plaintext ever escapes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "cke/protocol.hpp"
#include "cke/rng.hpp"

namespace cke {

struct StoreData {
    Role role = Role::Initiator;
    // Between writing the pairing offer and reading the reply, the offerer
    // parks its half-open state here.
    std::optional<CrtPending> crt_pending;
    std::optional<CrtState> crt;
    std::optional<ChainState> chain;
};

// Derives the 64-byte store key (32 cipher + 32 mac) from the passphrase
// and per-file salt by iterated KDF folding; slow on purpose.
std::array<std::uint8_t, 64> derive_store_key(std::string_view passphrase,
                                              std::span<const std::uint8_t> salt);

// Payload codec, exposed so tests can look at the plaintext shape.
std::string encode_store_payload(const StoreData& data);
StoreData decode_store_payload(const std::string& json);

// Encrypts and MACs the payload under a fresh salt and nonce, then
// replaces the file atomically (write to temp, rename over).
void save_store(const std::filesystem::path& path, const StoreData& data,
                std::string_view passphrase, Rng& rng);

// Verifies the MAC over the whole file before touching the ciphertext.
// Raises StoreAuthFailure on any mismatch, IoError if the file is missing.
StoreData load_store(const std::filesystem::path& path, std::string_view passphrase);

// Exclusive advisory lock guarding a store file against a second process.
// Held from construction to destruction; StoreLocked if another holder
// exists.
class StoreLock {
public:
    explicit StoreLock(const std::filesystem::path& store_path);
    ~StoreLock();

    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace cke
