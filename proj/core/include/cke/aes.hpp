#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace cke {

// AES-256 block cipher, encryption direction only. CTR mode never needs the
// inverse cipher, so the decryption key schedule is not implemented.
class Aes256 {
public:
    explicit Aes256(const std::array<std::uint8_t, 32>& key);
    ~Aes256();

    Aes256(const Aes256&) = delete;
    Aes256& operator=(const Aes256&) = delete;

    void encrypt_block(const std::uint8_t in[16], std::uint8_t out[16]) const;

private:
    std::array<std::uint32_t, 60> round_keys_;
};

// XORs the AES-256-CTR keystream into `data` in place. The 16-byte block fed
// to the cipher is iv with its last 4 bytes replaced by a big-endian block
// counter starting at `counter_start`. Encryption and decryption are the same
// operation.
void aes256_ctr_xor(const std::array<std::uint8_t, 32>& key,
                    const std::array<std::uint8_t, 16>& iv,
                    std::uint32_t counter_start,
                    std::span<std::uint8_t> data);

} // namespace cke
