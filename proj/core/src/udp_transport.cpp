#include "cke/udp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "cke/errors.hpp"

namespace cke {

namespace {

constexpr std::size_t kMaxDatagram = 64 * 1024;

[[noreturn]] void raise_errno(const std::string& what) {
    raise(Errc::io_error, what + ": " + std::strerror(errno));
}

} // namespace

UdpTransport::UdpTransport(int fd) : fd_(fd) {}

UdpTransport UdpTransport::connect(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    if (int rc = getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
        raise(Errc::io_error, "cannot resolve " + host + ": " + gai_strerror(rc));

    int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        freeaddrinfo(res);
        raise_errno("socket");
    }
    if (::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
        freeaddrinfo(res);
        close(fd);
        raise_errno("connect");
    }
    freeaddrinfo(res);

    UdpTransport t(fd);
    t.peer_known_ = true;
    return t;
}

UdpTransport UdpTransport::bind(std::uint16_t port) {
    int fd = socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) raise_errno("socket");

    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        close(fd);
        raise_errno("bind");
    }
    return UdpTransport(fd);
}

UdpTransport::UdpTransport(UdpTransport&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), peer_known_(other.peer_known_) {}

UdpTransport& UdpTransport::operator=(UdpTransport&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) close(fd_);
        fd_ = std::exchange(other.fd_, -1);
        peer_known_ = other.peer_known_;
    }
    return *this;
}

UdpTransport::~UdpTransport() {
    if (fd_ >= 0) close(fd_);
}

void UdpTransport::send(std::span<const std::uint8_t> datagram) {
    if (!peer_known_) raise(Errc::io_error, "no peer yet: wait for an inbound datagram first");
    if (::send(fd_, datagram.data(), datagram.size(), 0) < 0) {
        // A lossy medium is part of the contract; refused/unreachable sends
        // behave like drops rather than failures.
        if (errno == ECONNREFUSED || errno == EHOSTUNREACH || errno == ENETUNREACH) return;
        raise_errno("send");
    }
}

std::optional<std::vector<std::uint8_t>> UdpTransport::recv(std::chrono::milliseconds timeout) {
    using Clock = std::chrono::steady_clock;
    Clock::time_point deadline = Clock::now() + timeout;

    for (;;) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (remaining.count() < 0) remaining = std::chrono::milliseconds(0);

        pollfd pfd{fd_, POLLIN, 0};
        int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (rc < 0) {
            if (errno == EINTR) continue;
            raise_errno("poll");
        }
        if (rc == 0) return std::nullopt;

        std::vector<std::uint8_t> buf(kMaxDatagram);
        sockaddr_in from{};
        socklen_t from_len = sizeof(from);
        ssize_t n = recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from),
                             &from_len);
        if (n < 0) {
            if (errno == EINTR || errno == ECONNREFUSED) continue;
            raise_errno("recvfrom");
        }

        if (!peer_known_) {
            // Lock onto the first sender so replies go somewhere sensible.
            if (::connect(fd_, reinterpret_cast<sockaddr*>(&from), from_len) < 0)
                raise_errno("connect to peer");
            peer_known_ = true;
        }

        buf.resize(static_cast<std::size_t>(n));
        return buf;
    }
}

std::uint16_t UdpTransport::local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0)
        raise_errno("getsockname");
    return ntohs(addr.sin_port);
}

} // namespace cke
