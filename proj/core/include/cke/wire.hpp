#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "cke/protocol.hpp"

namespace cke {

// Handshake frame layout, one frame per datagram:
//
//   "CKE1" | version 0x01 | kind | chain index (4B BE) | payload
//
// Payloads (all Nat fields length-framed like hash inputs):
//   OFFER  [0x01]  A, p, g, nonce value, nonce width in bits (2B BE)
//   REPLY  [0x02]  B
//   VERIFY [0x03]  64-byte digest
//   RETRY  [0x04]  attempt (1B)
//   ABORT  [0x05]  reason (1B)
//
// Decoding is strict: bad magic, unknown version or kind, truncation,
// trailing bytes, non-minimal integer magnitudes, or an oversized frame all
// raise MalformedFrame. Total frame length is capped at 64 KiB.

constexpr std::size_t kMaxFrameBytes = 64 * 1024;
constexpr std::uint8_t kFrameVersion = 0x01;
constexpr std::size_t kFrameHeaderBytes = 10;

enum class MsgKind : std::uint8_t {
    Offer = 0x01,
    Reply = 0x02,
    Verify = 0x03,
    Retry = 0x04,
    Abort = 0x05,
};

enum class AbortReason : std::uint8_t {
    VerifyFailed = 0x01,
    LocalFailure = 0x02,
    TooManyRestarts = 0x03,
};

struct OfferPayload {
    Nat public_value;
    Nat p;
    Nat g;
    Nonce nonce;
    bool operator==(const OfferPayload&) const = default;
};

struct ReplyPayload {
    Nat public_value;
    bool operator==(const ReplyPayload&) const = default;
};

struct VerifyPayload {
    Digest digest;
    bool operator==(const VerifyPayload&) const = default;
};

struct RetryPayload {
    std::uint8_t attempt = 0;
    bool operator==(const RetryPayload&) const = default;
};

struct AbortPayload {
    std::uint8_t reason = 0;
    bool operator==(const AbortPayload&) const = default;
};

struct Frame {
    std::uint32_t chain_index = 0;
    std::variant<OfferPayload, ReplyPayload, VerifyPayload, RetryPayload, AbortPayload> payload;

    MsgKind kind() const { return static_cast<MsgKind>(payload.index() + 1); }
    bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Glue between protocol-level messages (which carry their index) and frames
// (which carry it in the header).
Frame frame_from_offer(const Offer& offer);
Offer offer_from_frame(const Frame& frame);
Frame frame_from_reply(const Reply& reply);
Reply reply_from_frame(const Frame& frame);
Frame verify_frame(std::uint32_t index, const Digest& digest);
Frame retry_frame(std::uint32_t index, std::uint8_t attempt);
Frame abort_frame(std::uint32_t index, AbortReason reason);

} // namespace cke
