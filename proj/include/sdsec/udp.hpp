#pragma once

#include "sdsec/bytes.hpp"
#include "sdsec/sd_wire.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

namespace sdsec {

struct SocketAddress {
    Ipv4Address ip;
    std::uint16_t port = 0;

    /// "a.b.c.d:port"
    static SocketAddress parse(const std::string &text);
    [[nodiscard]] std::string to_string() const { return ip.to_string() + ":" + std::to_string(port); }

    friend auto operator<=>(const SocketAddress &, const SocketAddress &) = default;
};

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Datagram {
    SocketAddress from;
    Bytes data;
};

/// Non-copyable owning wrapper over an IPv4 UDP socket.
class UdpSocket {
public:
    UdpSocket() = default;
    ~UdpSocket();
    UdpSocket(UdpSocket &&other) noexcept;
    UdpSocket &operator=(UdpSocket &&other) noexcept;
    UdpSocket(const UdpSocket &) = delete;
    UdpSocket &operator=(const UdpSocket &) = delete;

    /// Throws NetError ("BindFailure") when the address cannot be bound.
    static UdpSocket bind(SocketAddress local, bool reuse = false);

    void send_to(const SocketAddress &to, ByteView data) const;
    /// Waits up to `timeout`; nullopt on timeout.
    std::optional<Datagram> receive(std::chrono::milliseconds timeout) const;

    void join_multicast(Ipv4Address group, Ipv4Address interface_addr) const;
    void set_multicast_interface(Ipv4Address interface_addr) const;

    [[nodiscard]] SocketAddress local_address() const;
    [[nodiscard]] bool valid() const { return fd_ >= 0; }
    /// Unblocks a concurrent receive() by shutting the socket down.
    void shutdown() const;

private:
    explicit UdpSocket(int fd) : fd_(fd) {}
    int fd_ = -1;
};

/// Answers datagrams on a background thread. A non-empty handler result is sent back to
/// the sender; handler exceptions drop the request.
class UdpResponder {
public:
    using Handler = std::function<Bytes(ByteView request, const SocketAddress &from)>;

    UdpResponder(SocketAddress bind_address, Handler handler);
    ~UdpResponder();
    UdpResponder(const UdpResponder &) = delete;
    UdpResponder &operator=(const UdpResponder &) = delete;

    [[nodiscard]] SocketAddress local_address() const { return local_; }
    void stop();

private:
    void run();

    UdpSocket socket_;
    SocketAddress local_;
    Handler handler_;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

}  // namespace sdsec
