#include "cke/digest.hpp"

#include <cstring>

#include "cke/errors.hpp"
#include "cke/rng.hpp"

namespace cke {

std::vector<std::uint8_t> Nonce::to_bytes() const {
    if (value.bit_length() > width_bits)
        raise(Errc::invalid_input, "nonce value wider than declared width");
    std::size_t len = (width_bits + 7) / 8;
    return value.to_bytes_be_padded(len);
}

Nonce Nonce::zero(unsigned width_bits) {
    return Nonce{Nat(), width_bits};
}

Nonce Nonce::random(Rng& rng, const Nat& modulus, unsigned width_bits) {
    return Nonce{rand_below(rng, modulus), width_bits};
}

std::vector<std::uint8_t> encode_nat(const Nat& x) {
    std::vector<std::uint8_t> mag = x.to_bytes_be();
    std::vector<std::uint8_t> out;
    out.reserve(4 + mag.size());
    std::uint32_t len = static_cast<std::uint32_t>(mag.size());
    out.push_back(static_cast<std::uint8_t>(len >> 24));
    out.push_back(static_cast<std::uint8_t>(len >> 16));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), mag.begin(), mag.end());
    return out;
}

Nat kdf(const Nat& key, std::string_view context, unsigned out_bits) {
    if (out_bits < 1) raise(Errc::invalid_input, "kdf output width must be positive");
    if (context.empty()) raise(Errc::invalid_input, "kdf context must be non-empty");

    std::vector<std::uint8_t> encoded_key = encode_nat(key);
    std::size_t out_bytes = (out_bits + 7) / 8;

    std::vector<std::uint8_t> stream;
    stream.reserve(out_bytes + 64);
    for (std::uint32_t j = 1; stream.size() < out_bytes; ++j) {
        Sha512 h;
        std::uint8_t ctr[4] = {static_cast<std::uint8_t>(j >> 24), static_cast<std::uint8_t>(j >> 16),
                               static_cast<std::uint8_t>(j >> 8), static_cast<std::uint8_t>(j)};
        h.update(std::span<const std::uint8_t>(ctr, 4));
        h.update(context);
        h.update(encoded_key);
        Digest block = h.finish();
        stream.insert(stream.end(), block.begin(), block.end());
    }
    stream.resize(out_bytes);

    Nat result = Nat::from_bytes_be(stream);
    unsigned excess = static_cast<unsigned>(out_bytes * 8) - out_bits;
    if (excess > 0) result = result >> excess;
    return result;
}

Digest link_digest(Role role, const Nat& key_i, const Nat& prev_chain,
                   const std::optional<Digest>& prev_digest, const Nonce& nonce) {
    std::vector<std::uint8_t> first = encode_nat(role == Role::Initiator ? key_i : prev_chain);
    std::vector<std::uint8_t> second = encode_nat(role == Role::Initiator ? prev_chain : key_i);

    Sha512 h;
    h.update(first);
    h.update(second);
    if (prev_digest) h.update(std::span<const std::uint8_t>(prev_digest->data(), prev_digest->size()));
    h.update(nonce.to_bytes());
    return h.finish();
}

TransferKeys derive_transfer_keys(const Nat& key_i) {
    if (key_i.bit_length() < 512)
        raise(Errc::key_too_short, "session key below 512 bits cannot seed transfer keys");

    Nat enc = kdf(key_i, "CKE-ENC", 256);
    Nat mac = kdf(key_i, "CKE-MAC", 512);

    TransferKeys keys;
    std::vector<std::uint8_t> enc_bytes = enc.to_bytes_be_padded(32);
    std::vector<std::uint8_t> mac_bytes = mac.to_bytes_be_padded(64);
    std::memcpy(keys.enc_key.data(), enc_bytes.data(), 32);
    std::memcpy(keys.mac_key.data(), mac_bytes.data(), 64);
    enc.wipe();
    mac.wipe();
    return keys;
}

} // namespace cke
