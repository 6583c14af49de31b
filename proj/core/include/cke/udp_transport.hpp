#pragma once

#include <cstdint>
#include <string>

#include "cke/transport.hpp"

namespace cke {

// One frame per UDP datagram. The transport either connects to a fixed
// remote (client style) or binds a local port and locks onto the first
// peer that sends to it (server style), after which datagrams from other
// sources are ignored.
class UdpTransport : public Transport {
public:
    static UdpTransport connect(const std::string& host, std::uint16_t port);
    static UdpTransport bind(std::uint16_t port);

    UdpTransport(UdpTransport&& other) noexcept;
    UdpTransport& operator=(UdpTransport&& other) noexcept;
    UdpTransport(const UdpTransport&) = delete;
    UdpTransport& operator=(const UdpTransport&) = delete;
    ~UdpTransport() override;

    void send(std::span<const std::uint8_t> datagram) override;
    std::optional<std::vector<std::uint8_t>> recv(std::chrono::milliseconds timeout) override;

    std::uint16_t local_port() const;

private:
    explicit UdpTransport(int fd);

    int fd_ = -1;
    bool peer_known_ = false;
};

} // namespace cke
