#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "cke/digest.hpp"
#include "cke/rng.hpp"
#include "cke/transport.hpp"

namespace cke {

// TFTP-style lock-step transfer with every DATA payload encrypted
// (AES-256-CTR) and authenticated (truncated prefix-keyed SHA-512),
// encrypt-then-MAC. The RFC 1350 skeleton is kept: one block in flight,
// 512-byte blocks, a short final block (possibly empty) ends the file,
// block numbers start at 1, a write request is acknowledged with ACK 0.
//
// Requests carry an 8-byte transfer id (fresh random from the requester,
// binding keystream and MACs to this transfer) and the chain index whose
// key material both sides must be using.

enum class TftpOp : std::uint16_t {
    Rrq = 1,
    Wrq = 2,
    Data = 3,
    Ack = 4,
    Error = 5,
};

// TFTP error codes; 1/2/4 follow RFC 1350, the rest are local extensions.
enum class TftpErr : std::uint16_t {
    Undefined = 0,
    FileNotFound = 1,
    AccessViolation = 2,
    IllegalOperation = 4,
    IntegrityFailure = 8,
    KeyBindingMismatch = 9,
};

using TransferId = std::array<std::uint8_t, 8>;

struct RequestPacket { // RRQ and WRQ
    bool write = false;
    std::string filename;
    TransferId transfer_id{};
    std::uint32_t chain_index = 0;
    bool operator==(const RequestPacket&) const = default;
};

struct DataPacket {
    std::uint16_t block = 0;
    std::vector<std::uint8_t> ciphertext; // <= 512 bytes; short block ends the file
    std::array<std::uint8_t, 32> mac{};
    bool operator==(const DataPacket&) const = default;
};

struct AckPacket {
    std::uint16_t block = 0;
    bool operator==(const AckPacket&) const = default;
};

struct ErrorPacket {
    std::uint16_t code = 0;
    std::string message;
    bool operator==(const ErrorPacket&) const = default;
};

using TftpPacket = std::variant<RequestPacket, DataPacket, AckPacket, ErrorPacket>;

std::vector<std::uint8_t> encode_packet(const TftpPacket& packet);
TftpPacket decode_packet(std::span<const std::uint8_t> bytes); // raises MalformedPacket

// Transfer keys bound to the chain link they came from.
struct BoundKeys {
    TransferKeys keys;
    std::uint32_t chain_index = 0;
};

struct SealedBlock {
    std::vector<std::uint8_t> ciphertext;
    std::array<std::uint8_t, 32> mac;
};

// ciphertext = AES-256-CTR(enc_key) over the plaintext with counter block
// transfer_id(8) || block(4 BE) || intra-counter(4 BE from 0);
// mac = first 32 bytes of sha512(mac_key || opcode 3 (2 BE) || transfer_id
// || block(4 BE) || ciphertext).
SealedBlock seal_block(const TransferKeys& keys, const TransferId& tid, std::uint32_t block,
                       std::span<const std::uint8_t> plaintext);

// Verifies the MAC bytewise before any decryption; raises MacMismatch
// without releasing anything on failure.
std::vector<std::uint8_t> open_block(const TransferKeys& keys, const TransferId& tid,
                                     std::uint32_t block, std::span<const std::uint8_t> ciphertext,
                                     const std::array<std::uint8_t, 32>& mac);

struct TftpConfig {
    std::chrono::milliseconds recv_timeout{1000};
    int max_retransmits = 5; // per block
};

struct TransferReport {
    std::uint32_t blocks = 0;
    std::uint32_t retransmits = 0;
    std::uint64_t bytes = 0;
};

// Active sides: send or fetch one file. `remote_name` is the name quoted in
// the request; paths are local. Errors: Timeout, MacMismatch (local
// integrity failure), PeerError (the peer sent ERROR), IoError.
TransferReport put_file(Transport& transport, const BoundKeys& bound, const std::string& local_path,
                        const std::string& remote_name, Rng& rng, const TftpConfig& cfg = {});
TransferReport get_file(Transport& transport, const BoundKeys& bound, const std::string& remote_name,
                        const std::string& local_path, Rng& rng, const TftpConfig& cfg = {});

// Passive side: wait for one request and serve it against `root`. Files are
// confined to that directory (no traversal). Incoming writes land in a
// temp file and are renamed into place only after the final block verifies.
TransferReport serve_one(Transport& transport, const BoundKeys& bound,
                         const std::filesystem::path& root, const TftpConfig& cfg = {});

} // namespace cke
