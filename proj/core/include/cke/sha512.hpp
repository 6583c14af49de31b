#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace cke {

using Digest = std::array<std::uint8_t, 64>;

// Incremental SHA-512. Feed any number of update() calls, then finish().
// The object can be reused after reset().
class Sha512 {
public:
    Sha512() { reset(); }

    void reset();
    void update(std::span<const std::uint8_t> data);
    void update(std::string_view data);
    Digest finish();

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint64_t, 8> state_;
    std::array<std::uint8_t, 128> buffer_;
    std::size_t buffered_ = 0;
    std::uint64_t total_lo_ = 0; // message length in bytes, 128-bit counter
    std::uint64_t total_hi_ = 0;
};

Digest sha512(std::span<const std::uint8_t> data);
Digest sha512(std::string_view data);

} // namespace cke
