#include "sdsec/runtime.hpp"

namespace sdsec {

// --- event loop ---------------------------------------------------------------

EventLoop::EventLoop(ClockMode mode) : mode_(mode), virtual_now_(std::chrono::seconds(1)) {}

Instant EventLoop::now() const {
    if (mode_ == ClockMode::Realtime) return std::chrono::steady_clock::now();
    std::lock_guard lock(mutex_);
    return virtual_now_;
}

EventLoop::TimerId EventLoop::schedule_at(Instant at, std::function<void()> fn) {
    std::lock_guard lock(mutex_);
    const TimerId id = next_id_++;
    Key key{at, id};
    queue_.emplace(key, std::move(fn));
    index_.emplace(id, key);
    cv_.notify_all();
    return id;
}

void EventLoop::cancel(TimerId id) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(id);
    if (it == index_.end()) return;
    queue_.erase(it->second);
    index_.erase(it);
}

std::size_t EventLoop::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

bool EventLoop::run_until(const std::function<bool()> &done, Duration limit) {
    const Instant deadline = now() + limit;
    while (!done()) {
        std::function<void()> fn;
        {
            std::unique_lock lock(mutex_);
            if (mode_ == ClockMode::Virtual) {
                if (queue_.empty() || queue_.begin()->first.first > deadline) {
                    if (virtual_now_ < deadline) virtual_now_ = deadline;
                    break;
                }
                auto it = queue_.begin();
                if (it->first.first > virtual_now_) virtual_now_ = it->first.first;
                fn = std::move(it->second);
                index_.erase(it->first.second);
                queue_.erase(it);
            } else {
                const Instant real = std::chrono::steady_clock::now();
                if (real >= deadline) break;
                if (queue_.empty()) {
                    cv_.wait_until(lock, deadline);
                    continue;
                }
                auto it = queue_.begin();
                const Instant due = it->first.first;
                if (due > real) {
                    cv_.wait_until(lock, std::min(due, deadline));
                    continue;
                }
                fn = std::move(it->second);
                index_.erase(it->first.second);
                queue_.erase(it);
            }
        }
        fn();
    }
    return done();
}

// --- in-process bus -----------------------------------------------------------

class InProcBus::Port final : public Transport {
public:
    Port(InProcBus &bus, SocketAddress address) : bus_(bus), address_(address) {}
    ~Port() override { bus_.detach(address_); }

    [[nodiscard]] SocketAddress local_address() const override { return address_; }
    void send(const SocketAddress &to, ByteView data) override { bus_.transmit(address_, to, data, false); }
    void send_multicast(ByteView data) override {
        bus_.transmit(address_, {kSdMulticastGroup, kSdPort}, data, true);
    }
    void set_receiver(Receiver receiver) override { receiver_ = std::move(receiver); }

    void deliver(const SocketAddress &from, const Bytes &data, bool multicast) const {
        if (receiver_) receiver_(from, data, multicast);
    }

private:
    InProcBus &bus_;
    SocketAddress address_;
    Receiver receiver_;
};

InProcBus::InProcBus(EventLoop &loop, BusConfig config)
    : loop_(loop), config_(config), rng_(config.seed), alive_(std::make_shared<bool>(true)) {}

InProcBus::~InProcBus() { *alive_ = false; }

std::unique_ptr<Transport> InProcBus::attach(SocketAddress address) {
    std::lock_guard lock(mutex_);
    if (ports_.count(address)) throw NetError("BindFailure: " + address.to_string() + " already attached");
    auto port = std::make_unique<Port>(*this, address);
    ports_[address] = port.get();
    return port;
}

void InProcBus::detach(const SocketAddress &address) {
    std::lock_guard lock(mutex_);
    ports_.erase(address);
}

Duration InProcBus::sample_delay() {
    Duration d = config_.latency;
    if (config_.jitter > Duration::zero())
        d += Duration(std::uniform_int_distribution<Duration::rep>(0, config_.jitter.count())(rng_));
    return d;
}

void InProcBus::transmit(const SocketAddress &from, const SocketAddress &to, ByteView data, bool multicast) {
    std::vector<std::pair<SocketAddress, Duration>> targets;
    {
        std::lock_guard lock(mutex_);
        (multicast ? multicast_ : unicast_)++;
        if (tracing_) trace_.push_back({loop_.now(), from, to, multicast, Bytes(data.begin(), data.end())});
        auto add = [&](const SocketAddress &dst) {
            if (config_.drop_probability > 0 &&
                std::uniform_real_distribution<double>(0, 1)(rng_) < config_.drop_probability) {
                ++dropped_;
                return;
            }
            targets.emplace_back(dst, sample_delay());
        };
        if (multicast) {
            for (const auto &[addr, port] : ports_)
                if (addr != from) add(addr);
        } else {
            add(to);
        }
    }
    auto payload = std::make_shared<const Bytes>(data.begin(), data.end());
    for (const auto &[dst, delay] : targets) {
        loop_.schedule_after(delay, [this, alive = alive_, from, dst = dst, payload, multicast] {
            if (!*alive) return;
            Port *port = nullptr;
            {
                std::lock_guard lock(mutex_);
                auto it = ports_.find(dst);
                if (it != ports_.end()) port = it->second;
            }
            if (port) port->deliver(from, *payload, multicast);
        });
    }
}

std::uint64_t InProcBus::multicast_datagrams() const {
    std::lock_guard lock(mutex_);
    return multicast_;
}

std::uint64_t InProcBus::unicast_datagrams() const {
    std::lock_guard lock(mutex_);
    return unicast_;
}

std::uint64_t InProcBus::dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
}

void InProcBus::set_tracing(bool on) {
    std::lock_guard lock(mutex_);
    tracing_ = on;
}

std::vector<TraceRecord> InProcBus::trace() const {
    std::lock_guard lock(mutex_);
    return trace_;
}

// --- UDP transport ------------------------------------------------------------

UdpTransport::UdpTransport(EventLoop &loop, UdpTransportConfig config)
    : loop_(loop), config_(config), unicast_(UdpSocket::bind(config.local)) {
    local_ = unicast_.local_address();
    if (local_.ip.value == 0) local_.ip = Ipv4Address{0x7F000001};
    const Ipv4Address iface = config.local.ip.value == 0 ? Ipv4Address{0x7F000001} : config.local.ip;
    unicast_.set_multicast_interface(iface);
    if (config_.join_group) {
        group_ = UdpSocket::bind({config_.group, config_.sd_port}, true);
        group_.join_multicast(config_.group, iface);
    }
    threads_.emplace_back([this] { pump(unicast_, false); });
    if (group_.valid()) threads_.emplace_back([this] { pump(group_, true); });
}

UdpTransport::~UdpTransport() {
    stopping_ = true;
    for (auto &t : threads_) t.join();
    std::lock_guard lock(receiver_mutex_);
    receiver_.reset();
}

void UdpTransport::send(const SocketAddress &to, ByteView data) { unicast_.send_to(to, data); }

void UdpTransport::send_multicast(ByteView data) {
    ++multicast_sent_;
    unicast_.send_to({config_.group, config_.sd_port}, data);
}

void UdpTransport::set_receiver(Receiver receiver) {
    std::lock_guard lock(receiver_mutex_);
    receiver_ = std::make_shared<Receiver>(std::move(receiver));
}

void UdpTransport::pump(const UdpSocket &socket, bool multicast) {
    while (!stopping_) {
        std::optional<Datagram> d;
        try {
            d = socket.receive(std::chrono::milliseconds(50));
        } catch (const NetError &) {
            continue;
        }
        if (!d) continue;
        if (multicast && d->from == local_) continue;  // our own loopback copy
        std::shared_ptr<Receiver> rx;
        {
            std::lock_guard lock(receiver_mutex_);
            rx = receiver_;
        }
        if (!rx) continue;
        std::weak_ptr<Receiver> weak = rx;
        loop_.post([weak, dg = std::move(*d), multicast] {
            if (auto r = weak.lock()) (*r)(dg.from, dg.data, multicast);
        });
    }
}

// --- node host ----------------------------------------------------------------

NodeHost::NodeHost(EventLoop &loop, std::unique_ptr<Transport> transport, std::shared_ptr<ServiceResolver> resolver,
                   ResolveDispatch dispatch, Duration resolve_latency)
    : loop_(loop),
      transport_(std::move(transport)),
      resolver_(std::move(resolver)),
      dispatch_(dispatch),
      resolve_latency_(resolve_latency),
      alive_(std::make_shared<bool>(true)) {
    if (dispatch_ == ResolveDispatch::Worker) worker_ = std::thread([this] { worker_main(); });
}

NodeHost::~NodeHost() {
    *alive_ = false;
    transport_->set_receiver({});
    for (auto id : timers_) loop_.cancel(id);
    if (worker_.joinable()) {
        {
            std::lock_guard lock(mutex_);
            worker_stop_ = true;
        }
        worker_cv_.notify_all();
        worker_.join();
    }
}

void NodeHost::bind(DatagramHandler *handler) {
    handler_ = handler;
    transport_->set_receiver([this, alive = alive_](const SocketAddress &from, const Bytes &data, bool multicast) {
        if (*alive && handler_) handler_->on_datagram(from, data, multicast);
    });
}

void NodeHost::send(const SocketAddress &to, ByteView data) {
    try {
        transport_->send(to, data);
        std::lock_guard lock(mutex_);
        ++stats_.unicast_sent;
    } catch (const NetError &) {
        std::lock_guard lock(mutex_);
        ++stats_.send_errors;
    }
}

void NodeHost::send_multicast(ByteView data) {
    try {
        transport_->send_multicast(data);
        std::lock_guard lock(mutex_);
        ++stats_.multicast_sent;
    } catch (const NetError &) {
        std::lock_guard lock(mutex_);
        ++stats_.send_errors;
    }
}

NodeHost::TimerId NodeHost::start_timer(Duration after, std::function<void()> fn) {
    auto id = std::make_shared<TimerId>(0);
    *id = loop_.schedule_after(after, [this, alive = alive_, id, fn = std::move(fn)] {
        if (!*alive) return;
        timers_.erase(*id);
        fn();
    });
    timers_.insert(*id);
    return *id;
}

void NodeHost::cancel_timer(TimerId id) {
    timers_.erase(id);
    loop_.cancel(id);
}

void NodeHost::resolve(const DnsName &name, RRType type, ResolveCallback callback) {
    {
        std::lock_guard lock(mutex_);
        ++stats_.dns_queries;
    }
    auto deliver = [this, alive = alive_, callback = std::move(callback)](ResolveResult r) mutable {
        loop_.post([alive, callback = std::move(callback), r = std::move(r)] {
            if (*alive) callback(r);
        });
    };
    if (!resolver_) {
        ResolveResult r;
        r.status = ResolveStatus::UpstreamTimeout;
        r.detail = "no resolver configured";
        deliver(std::move(r));
        return;
    }
    if (dispatch_ == ResolveDispatch::Inline) {
        ResolveResult r = resolver_->resolve(name, type);
        start_timer(resolve_latency_, [callback = std::move(deliver), r = std::move(r)]() mutable {
            callback(std::move(r));
        });
        return;
    }
    {
        std::lock_guard lock(mutex_);
        worker_queue_.push_back([resolver = resolver_, name, type, deliver = std::move(deliver)]() mutable {
            deliver(resolver->resolve(name, type));
        });
    }
    worker_cv_.notify_all();
}

void NodeHost::worker_main() {
    for (;;) {
        std::function<void()> job;
        {
            std::unique_lock lock(mutex_);
            worker_cv_.wait(lock, [this] { return worker_stop_ || !worker_queue_.empty(); });
            if (worker_stop_) return;
            job = std::move(worker_queue_.front());
            worker_queue_.pop_front();
        }
        job();
    }
}

NodeStats NodeHost::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

}  // namespace sdsec
