#include "cke/rng.hpp"

#include <bit>
#include <cstring>
#include <random>

namespace cke {

namespace {

constexpr std::array<std::uint32_t, 4> kSigma = {0x61707865, 0x3320646e, 0x79622d32, 0x6b206574};

inline void quarter_round(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c, std::uint32_t& d) {
    a += b; d ^= a; d = std::rotl(d, 16);
    c += d; b ^= c; b = std::rotl(b, 12);
    a += b; d ^= a; d = std::rotl(d, 8);
    c += d; b ^= c; b = std::rotl(b, 7);
}

void chacha20_block(const std::array<std::uint32_t, 16>& in, std::array<std::uint8_t, 64>& out) {
    std::array<std::uint32_t, 16> x = in;
    for (int round = 0; round < 10; ++round) {
        quarter_round(x[0], x[4], x[8], x[12]);
        quarter_round(x[1], x[5], x[9], x[13]);
        quarter_round(x[2], x[6], x[10], x[14]);
        quarter_round(x[3], x[7], x[11], x[15]);
        quarter_round(x[0], x[5], x[10], x[15]);
        quarter_round(x[1], x[6], x[11], x[12]);
        quarter_round(x[2], x[7], x[8], x[13]);
        quarter_round(x[3], x[4], x[9], x[14]);
    }
    for (std::size_t i = 0; i < 16; ++i) {
        std::uint32_t word = x[i] + in[i];
        out[4 * i + 0] = static_cast<std::uint8_t>(word);
        out[4 * i + 1] = static_cast<std::uint8_t>(word >> 8);
        out[4 * i + 2] = static_cast<std::uint8_t>(word >> 16);
        out[4 * i + 3] = static_cast<std::uint8_t>(word >> 24);
    }
}

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Rng::Rng() {
    std::random_device rd;
    std::array<std::uint8_t, 32> key;
    for (std::size_t i = 0; i < key.size(); i += 4) {
        std::uint32_t w = rd();
        std::memcpy(key.data() + i, &w, 4);
    }
    *this = Rng(key);
}

Rng::Rng(std::uint64_t seed) {
    std::array<std::uint8_t, 32> key;
    std::uint64_t s = seed;
    for (std::size_t i = 0; i < 4; ++i) {
        std::uint64_t w = splitmix64(s);
        std::memcpy(key.data() + 8 * i, &w, 8);
    }
    *this = Rng(key);
}

Rng::Rng(const std::array<std::uint8_t, 32>& key) {
    for (std::size_t i = 0; i < 4; ++i) state_[i] = kSigma[i];
    for (std::size_t i = 0; i < 8; ++i) {
        std::uint32_t w = 0;
        std::memcpy(&w, key.data() + 4 * i, 4);
        state_[4 + i] = w;
    }
    state_[12] = 0; // block counter
    state_[13] = 0;
    state_[14] = 0;
    state_[15] = 0;
    pos_ = 64;
}

void Rng::refill() {
    chacha20_block(state_, block_);
    if (++state_[12] == 0) ++state_[13];
    pos_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
    std::size_t done = 0;
    while (done < out.size()) {
        if (pos_ == 64) refill();
        std::size_t take = std::min<std::size_t>(64 - pos_, out.size() - done);
        std::memcpy(out.data() + done, block_.data() + pos_, take);
        pos_ += take;
        done += take;
    }
}

std::uint32_t Rng::next_u32() {
    std::array<std::uint8_t, 4> buf;
    fill(buf);
    std::uint32_t v = 0;
    std::memcpy(&v, buf.data(), 4);
    return v;
}

std::uint64_t Rng::next_u64() {
    std::array<std::uint8_t, 8> buf;
    fill(buf);
    std::uint64_t v = 0;
    std::memcpy(&v, buf.data(), 8);
    return v;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        std::uint64_t v = next_u64();
        if (v < limit) return v % bound;
    }
}

bool Rng::chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 < p;
}

} // namespace cke
