#include "sdsec/udp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace sdsec {

namespace {

sockaddr_in to_sockaddr(const SocketAddress &a) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(a.port);
    sa.sin_addr.s_addr = htonl(a.ip.value);
    return sa;
}

SocketAddress from_sockaddr(const sockaddr_in &sa) {
    return {Ipv4Address{ntohl(sa.sin_addr.s_addr)}, ntohs(sa.sin_port)};
}

[[noreturn]] void sys_fail(const std::string &what) { throw NetError(what + ": " + std::strerror(errno)); }

}  // namespace

SocketAddress SocketAddress::parse(const std::string &text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected <addr>:<port>, got '" + text + "'");
    SocketAddress a;
    a.ip = Ipv4Address::parse(text.substr(0, colon));
    unsigned long port = 0;
    try {
        std::size_t used = 0;
        port = std::stoul(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("port");
    } catch (const std::exception &) {
        throw std::invalid_argument("invalid port in '" + text + "'");
    }
    if (port > 0xFFFF) throw std::invalid_argument("port out of range in '" + text + "'");
    a.port = static_cast<std::uint16_t>(port);
    return a;
}

UdpSocket::~UdpSocket() {
    if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket &&other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

UdpSocket &UdpSocket::operator=(UdpSocket &&other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

UdpSocket UdpSocket::bind(SocketAddress local, bool reuse) {
    int fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (fd < 0) sys_fail("socket");
    UdpSocket s(fd);
    if (reuse) {
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEPORT, &one, sizeof one);
    }
    auto sa = to_sockaddr(local);
    if (::bind(fd, reinterpret_cast<const sockaddr *>(&sa), sizeof sa) != 0)
        throw NetError("BindFailure: " + local.to_string() + ": " + std::strerror(errno));
    return s;
}

void UdpSocket::send_to(const SocketAddress &to, ByteView data) const {
    auto sa = to_sockaddr(to);
    ssize_t n = ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<const sockaddr *>(&sa), sizeof sa);
    if (n < 0) sys_fail("sendto " + to.to_string());
}

std::optional<Datagram> UdpSocket::receive(std::chrono::milliseconds timeout) const {
    pollfd pfd{fd_, POLLIN, 0};
    for (;;) {
        int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc < 0) sys_fail("poll");
        if (rc == 0) return std::nullopt;
        break;
    }
    if (pfd.revents & (POLLHUP | POLLERR | POLLNVAL) && !(pfd.revents & POLLIN)) return std::nullopt;
    Bytes buf(65536);
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), MSG_DONTWAIT, reinterpret_cast<sockaddr *>(&sa), &len);
    if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == ECONNREFUSED || errno == EINTR) return std::nullopt;
        sys_fail("recvfrom");
    }
    buf.resize(static_cast<std::size_t>(n));
    return Datagram{from_sockaddr(sa), std::move(buf)};
}

void UdpSocket::join_multicast(Ipv4Address group, Ipv4Address interface_addr) const {
    ip_mreq mreq{};
    mreq.imr_multiaddr.s_addr = htonl(group.value);
    mreq.imr_interface.s_addr = htonl(interface_addr.value);
    if (::setsockopt(fd_, IPPROTO_IP, IP_ADD_MEMBERSHIP, &mreq, sizeof mreq) != 0) sys_fail("IP_ADD_MEMBERSHIP");
    unsigned char loop = 1;
    ::setsockopt(fd_, IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof loop);
}

void UdpSocket::set_multicast_interface(Ipv4Address interface_addr) const {
    in_addr a{};
    a.s_addr = htonl(interface_addr.value);
    if (::setsockopt(fd_, IPPROTO_IP, IP_MULTICAST_IF, &a, sizeof a) != 0) sys_fail("IP_MULTICAST_IF");
    unsigned char loop = 1;
    ::setsockopt(fd_, IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof loop);
}

SocketAddress UdpSocket::local_address() const {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    if (::getsockname(fd_, reinterpret_cast<sockaddr *>(&sa), &len) != 0) sys_fail("getsockname");
    return from_sockaddr(sa);
}

void UdpSocket::shutdown() const {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

UdpResponder::UdpResponder(SocketAddress bind_address, Handler handler)
    : socket_(UdpSocket::bind(bind_address)), local_(socket_.local_address()), handler_(std::move(handler)) {
    thread_ = std::thread([this] { run(); });
}

UdpResponder::~UdpResponder() { stop(); }

void UdpResponder::stop() {
    stopping_ = true;
    if (thread_.joinable()) thread_.join();
}

void UdpResponder::run() {
    while (!stopping_) {
        std::optional<Datagram> d;
        try {
            d = socket_.receive(std::chrono::milliseconds(50));
        } catch (const NetError &) {
            continue;
        }
        if (!d) continue;
        try {
            Bytes reply = handler_(d->data, d->from);
            if (!reply.empty()) socket_.send_to(d->from, reply);
        } catch (const std::exception &) {
        }
    }
}

}  // namespace sdsec
