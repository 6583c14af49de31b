// Shared fixtures for the test suites: the 256-bit experiment group, a
// root-of-trust stand-in whose (p, g) collide with none of the toy session
// groups, and a transport wrapper for targeted frame tampering.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cke/nat.hpp"
#include "cke/groups.hpp"
#include "cke/protocol.hpp"
#include "cke/transport.hpp"

namespace testsupport {

// 256-bit safe-prime group for the adversary experiments: big enough that
// the birthday-style false positives of the 6-bit groups cannot occur,
// small enough that a full suite runs in seconds.
inline cke::DomainParams attack_group() {
    cke::DomainParams params;
    params.p =
        cke::Nat::from_hex("f28d217aa5357664557977fd6844ee2e1dfe8a04f072670499e7d3eff65c3c43");
    params.q = (params.p - cke::Nat(1)) >> 1;
    params.g = cke::Nat(2);
    params.n = 256;
    return params;
}

// Chain state rooted in the (p=23, g=7) pairing group. Both toy session
// groups use g=5, so parameter freshness never trips against this root.
inline cke::ChainState chain_at_root(const cke::Nat& chain_secret) {
    return cke::ChainState{0, chain_secret, std::nullopt, cke::Nat(23), cke::Nat(7)};
}

// Forwards datagrams through `inner`, letting a test mutate each outgoing
// datagram first. The callback sees frames in send order.
struct TamperTransport : cke::Transport {
    cke::Transport& inner;
    std::function<void(std::vector<std::uint8_t>&)> on_send;

    explicit TamperTransport(cke::Transport& t) : inner(t) {}

    void send(std::span<const std::uint8_t> datagram) override {
        std::vector<std::uint8_t> copy(datagram.begin(), datagram.end());
        if (on_send) on_send(copy);
        inner.send(copy);
    }

    std::optional<std::vector<std::uint8_t>> recv(std::chrono::milliseconds timeout) override {
        return inner.recv(timeout);
    }
};

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline std::vector<std::uint8_t> from_hex(std::string_view hex) {
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        return static_cast<std::uint8_t>(c - 'A' + 10);
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    return out;
}

} // namespace testsupport
