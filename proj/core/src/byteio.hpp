#pragma once

// Internal byte-stream helpers shared by the frame, packet, and key store
// codecs. Not installed.

#include <cstdint>
#include <span>
#include <vector>

#include "cke/errors.hpp"

namespace cke::detail {

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

// Bounds-checked cursor over an immutable byte buffer. Underruns raise the
// error code the owning codec hands in, so frame parsing reports
// MalformedFrame while packet parsing reports MalformedPacket.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, Errc on_underrun)
        : data_(data), on_underrun_(on_underrun) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint16_t u16be() {
        need(2);
        std::uint16_t v = (std::uint16_t(data_[pos_]) << 8) | data_[pos_ + 1];
        pos_ += 2;
        return v;
    }

    std::uint32_t u32be() {
        need(4);
        std::uint32_t v = (std::uint32_t(data_[pos_]) << 24) | (std::uint32_t(data_[pos_ + 1]) << 16) |
                          (std::uint32_t(data_[pos_ + 2]) << 8) | std::uint32_t(data_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto view = data_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

    std::span<const std::uint8_t> rest() { return bytes(remaining()); }

private:
    void need(std::size_t n) {
        if (remaining() < n) raise(on_underrun_, "input truncated");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    Errc on_underrun_;
};

} // namespace cke::detail
