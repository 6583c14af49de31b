#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cke {

// Unreliable datagram endpoint: sends never block meaningfully, receives
// wait up to a timeout and may yield nothing. Datagrams may be dropped,
// duplicated, reordered, or corrupted in flight; callers own all recovery.
class Transport {
public:
    virtual ~Transport() = default;

    virtual void send(std::span<const std::uint8_t> datagram) = 0;
    virtual std::optional<std::vector<std::uint8_t>> recv(std::chrono::milliseconds timeout) = 0;
};

} // namespace cke
