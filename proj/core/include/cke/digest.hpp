#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cke/nat.hpp"
#include "cke/sha512.hpp"

namespace cke {

// Which side of a link we are. The initiator opens the link with an OFFER;
// the responder answers it. Digest input ordering depends on this.
enum class Role : std::uint8_t { Initiator, Responder };

inline Role other_role(Role r) {
    return r == Role::Initiator ? Role::Responder : Role::Initiator;
}

// A nonce carries its bit width so it always serializes to the same number
// of bytes regardless of leading zero bits in the value.
struct Nonce {
    Nat value;
    unsigned width_bits = 0;

    bool operator==(const Nonce&) const = default;

    // Big-endian, exactly ceil(width_bits / 8) bytes. Raises InvalidInput if
    // the value does not fit the declared width.
    std::vector<std::uint8_t> to_bytes() const;

    static Nonce zero(unsigned width_bits);
    static Nonce random(Rng& rng, const Nat& modulus, unsigned width_bits);
};

// Length-framed big-endian encoding: 4-byte BE byte count, then the minimal
// magnitude bytes. Zero encodes as just the four zero length bytes. Used for
// every Nat that enters a hash, so field boundaries are unambiguous.
std::vector<std::uint8_t> encode_nat(const Nat& x);

// Counter-mode SHA-512 expansion: block j is sha512(BE32(j) || context ||
// encode_nat(key)) for j = 1, 2, ...; the concatenated stream is truncated
// to out_bits, keeping the most significant bits of the big-endian stream.
Nat kdf(const Nat& key, std::string_view context, unsigned out_bits);

// Link verification digest. The two roles hash the same material with the
// first two fields swapped, so the digests differ and each side can check
// that the peer computed its own ordering.
//
//   Initiator: sha512( encode_nat(key_i) || encode_nat(prev_chain) || prev_digest || nonce )
//   Responder: sha512( encode_nat(prev_chain) || encode_nat(key_i) || prev_digest || nonce )
//
// prev_digest is empty exactly at chain index 0, where prev_chain is the
// root-of-trust key and the nonce is the all-zero string.
Digest link_digest(Role role, const Nat& key_i, const Nat& prev_chain,
                   const std::optional<Digest>& prev_digest, const Nonce& nonce);

struct TransferKeys {
    std::array<std::uint8_t, 32> enc_key;
    std::array<std::uint8_t, 64> mac_key;
};

// Splits a session key into independent AES-256 and MAC keys. Requires at
// least a 512-bit session key so the derived material never stretches the
// source entropy. Raises KeyTooShort otherwise.
TransferKeys derive_transfer_keys(const Nat& key_i);

} // namespace cke
