#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace cke {

/// Seedable ChaCha20-keystream random generator.
///
/// Default construction seeds from OS entropy; the seeded form is fully
/// deterministic and portable, which is what tests and benchmarks rely on.
/// Handles are single-owner; do not share one across threads.
class Rng {
public:
    Rng();                                       // OS-entropy seed
    explicit Rng(std::uint64_t seed);            // deterministic stream
    explicit Rng(const std::array<std::uint8_t, 32>& key);

    void fill(std::span<std::uint8_t> out);
    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform in [0, bound) for bound >= 1, by rejection.
    std::uint64_t next_below(std::uint64_t bound);

    /// Bernoulli draw with probability p in [0, 1].
    bool chance(double p);

    Rng(const Rng&) = delete;
    Rng& operator=(const Rng&) = delete;
    Rng(Rng&&) = default;
    Rng& operator=(Rng&&) = default;

private:
    std::array<std::uint32_t, 16> state_{};
    std::array<std::uint8_t, 64> block_{};
    std::size_t pos_ = 64;

    void refill();
};

} // namespace cke
