#pragma once

// Event loop, transports and the per-node host the engine state machines run on.

#include "sdsec/auth.hpp"
#include "sdsec/resolver.hpp"
#include "sdsec/udp.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sdsec {

using Duration = std::chrono::steady_clock::duration;

inline const Ipv4Address kSdMulticastGroup{0xE0F4E0F5};  // 224.244.224.245
inline constexpr std::uint16_t kSdPort = 30490;

enum class ClockMode { Virtual, Realtime };

/// Single-threaded scheduler. Virtual mode jumps the clock from event to event, so a run is
/// a pure function of its inputs; realtime mode sleeps until each event is due. post() may be
/// called from any thread.
class EventLoop {
public:
    using TimerId = std::uint64_t;

    explicit EventLoop(ClockMode mode);

    [[nodiscard]] ClockMode mode() const { return mode_; }
    [[nodiscard]] Instant now() const;

    TimerId schedule_at(Instant at, std::function<void()> fn);
    TimerId schedule_after(Duration after, std::function<void()> fn) { return schedule_at(now() + after, std::move(fn)); }
    void cancel(TimerId id);
    void post(std::function<void()> fn) { schedule_after(Duration::zero(), std::move(fn)); }

    /// Runs events until `done()` holds or `limit` elapses. Returns done().
    bool run_until(const std::function<bool()> &done, Duration limit);
    void run_for(Duration limit) {
        run_until([] { return false; }, limit);
    }
    [[nodiscard]] std::size_t pending() const;

private:
    using Key = std::pair<Instant, std::uint64_t>;

    ClockMode mode_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    Instant virtual_now_;
    std::uint64_t next_id_ = 1;
    std::map<Key, std::function<void()>> queue_;
    std::unordered_map<TimerId, Key> index_;
};

/// One node's network attachment. Receivers run on the event loop thread.
class Transport {
public:
    using Receiver = std::function<void(const SocketAddress &from, const Bytes &data, bool multicast)>;

    virtual ~Transport() = default;
    [[nodiscard]] virtual SocketAddress local_address() const = 0;
    virtual void send(const SocketAddress &to, ByteView data) = 0;
    virtual void send_multicast(ByteView data) = 0;
    virtual void set_receiver(Receiver receiver) = 0;
};

struct BusConfig {
    Duration latency = Duration::zero();
    Duration jitter = Duration::zero();  // uniform extra delay in [0, jitter]
    double drop_probability = 0.0;
    std::uint64_t seed = 1;
};

struct TraceRecord {
    Instant at;
    SocketAddress from;
    SocketAddress to;  // the group address for multicast
    bool multicast = false;
    Bytes data;
    friend bool operator==(const TraceRecord &, const TraceRecord &) = default;
};

/// Deterministic in-process datagram network with a single multicast group.
class InProcBus {
public:
    explicit InProcBus(EventLoop &loop, BusConfig config = {});
    ~InProcBus();

    /// Throws NetError ("BindFailure") when the address is taken.
    std::unique_ptr<Transport> attach(SocketAddress address);

    [[nodiscard]] std::uint64_t multicast_datagrams() const;
    [[nodiscard]] std::uint64_t unicast_datagrams() const;
    [[nodiscard]] std::uint64_t dropped() const;

    void set_tracing(bool on);
    [[nodiscard]] std::vector<TraceRecord> trace() const;

private:
    class Port;
    friend class Port;

    void transmit(const SocketAddress &from, const SocketAddress &to, ByteView data, bool multicast);
    void detach(const SocketAddress &address);
    Duration sample_delay();

    EventLoop &loop_;
    BusConfig config_;
    mutable std::mutex mutex_;
    std::mt19937_64 rng_;
    std::map<SocketAddress, Port *> ports_;
    std::shared_ptr<bool> alive_;
    std::uint64_t multicast_ = 0, unicast_ = 0, dropped_ = 0;
    bool tracing_ = false;
    std::vector<TraceRecord> trace_;
};

struct UdpTransportConfig {
    SocketAddress local;  // port 0 picks an ephemeral port
    Ipv4Address group = kSdMulticastGroup;
    std::uint16_t sd_port = kSdPort;
    bool join_group = true;
};

/// Real sockets: a unicast socket for everything the node sends and receives directly,
/// plus a shared SD-port socket joined to the multicast group.
class UdpTransport final : public Transport {
public:
    UdpTransport(EventLoop &loop, UdpTransportConfig config);
    ~UdpTransport() override;

    [[nodiscard]] SocketAddress local_address() const override { return local_; }
    void send(const SocketAddress &to, ByteView data) override;
    void send_multicast(ByteView data) override;
    void set_receiver(Receiver receiver) override;

    [[nodiscard]] std::uint64_t multicast_sent() const { return multicast_sent_.load(); }

private:
    void pump(const UdpSocket &socket, bool multicast);

    EventLoop &loop_;
    UdpTransportConfig config_;
    UdpSocket unicast_;
    UdpSocket group_;
    SocketAddress local_;
    std::shared_ptr<Receiver> receiver_;
    std::mutex receiver_mutex_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> multicast_sent_{0};
    std::vector<std::thread> threads_;
};

/// What a state machine may do: clock, datagrams, timers and name resolution.
class NodeContext {
public:
    using TimerId = EventLoop::TimerId;
    using ResolveCallback = std::function<void(const ResolveResult &)>;

    virtual ~NodeContext() = default;
    [[nodiscard]] virtual Instant now() const = 0;
    [[nodiscard]] virtual SocketAddress local_address() const = 0;
    virtual void send(const SocketAddress &to, ByteView data) = 0;
    virtual void send_multicast(ByteView data) = 0;
    virtual TimerId start_timer(Duration after, std::function<void()> fn) = 0;
    virtual void cancel_timer(TimerId id) = 0;
    /// The callback always runs later on the event loop, never re-entrantly.
    virtual void resolve(const DnsName &name, RRType type, ResolveCallback callback) = 0;
};

class DatagramHandler {
public:
    virtual ~DatagramHandler() = default;
    virtual void on_datagram(const SocketAddress &from, ByteView data, bool multicast) = 0;
};

enum class ResolveDispatch {
    Inline,  // resolve on the loop thread; result delivered after `resolve_latency`
    Worker,  // resolve on a helper thread; for resolvers that block on the network
};

struct NodeStats {
    std::uint64_t unicast_sent = 0;
    std::uint64_t multicast_sent = 0;
    std::uint64_t dns_queries = 0;
    std::uint64_t send_errors = 0;
};

class NodeHost final : public NodeContext {
public:
    NodeHost(EventLoop &loop, std::unique_ptr<Transport> transport, std::shared_ptr<ServiceResolver> resolver = {},
             ResolveDispatch dispatch = ResolveDispatch::Inline, Duration resolve_latency = Duration::zero());
    ~NodeHost() override;
    NodeHost(const NodeHost &) = delete;
    NodeHost &operator=(const NodeHost &) = delete;

    void bind(DatagramHandler *handler);

    [[nodiscard]] Instant now() const override { return loop_.now(); }
    [[nodiscard]] SocketAddress local_address() const override { return transport_->local_address(); }
    void send(const SocketAddress &to, ByteView data) override;
    void send_multicast(ByteView data) override;
    TimerId start_timer(Duration after, std::function<void()> fn) override;
    void cancel_timer(TimerId id) override;
    void resolve(const DnsName &name, RRType type, ResolveCallback callback) override;

    [[nodiscard]] NodeStats stats() const;
    [[nodiscard]] EventLoop &loop() { return loop_; }

private:
    void worker_main();

    EventLoop &loop_;
    std::unique_ptr<Transport> transport_;
    std::shared_ptr<ServiceResolver> resolver_;
    ResolveDispatch dispatch_;
    Duration resolve_latency_;
    std::shared_ptr<bool> alive_;
    DatagramHandler *handler_ = nullptr;
    std::unordered_set<TimerId> timers_;

    mutable std::mutex mutex_;  // stats_ and the worker queue
    NodeStats stats_;
    std::condition_variable worker_cv_;
    std::deque<std::function<void()>> worker_queue_;
    bool worker_stop_ = false;
    std::thread worker_;
};

}  // namespace sdsec
