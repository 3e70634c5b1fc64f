#include "sdsec/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sdsec {

namespace {

double ms(Duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

UnixTime system_now() { return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()); }

/// Where the nodes of one run live and how the subscriber reaches its resolver.
class Network {
public:
    virtual ~Network() = default;
    virtual std::unique_ptr<Transport> attach_subscriber(int index) = 0;
    virtual std::shared_ptr<ServiceResolver> subscriber_resolver() = 0;
    virtual ResolveDispatch dispatch() const = 0;
    /// Queries seen by the name servers so far.
    virtual std::uint64_t upstream_queries() const = 0;
};

class InProcNetwork final : public Network {
public:
    InProcNetwork(EventLoop &loop, const Deployment &dep) : bus_(loop) {
        authority_ = std::make_shared<AuthoritativeServer>(dep.zones.zones);
        upstream_ = std::make_shared<InProcessUpstream>(authority_);
        ResolverConfig rc;
        rc.anchor = dep.zones.anchor;
        resolver_ = std::make_shared<ValidatingResolver>(rc, upstream_);
    }

    InProcBus &bus() { return bus_; }

    std::unique_ptr<Transport> attach_subscriber(int index) override {
        const Ipv4Address ip{0x0A000100u + static_cast<std::uint32_t>(index % 250 + 1)};  // 10.0.1.x
        return bus_.attach({ip, static_cast<std::uint16_t>(40000 + index % 20000)});
    }
    std::shared_ptr<ServiceResolver> subscriber_resolver() override { return resolver_; }
    ResolveDispatch dispatch() const override { return ResolveDispatch::Inline; }
    std::uint64_t upstream_queries() const override { return authority_->queries_answered(); }

private:
    InProcBus bus_;
    std::shared_ptr<AuthoritativeServer> authority_;
    std::shared_ptr<InProcessUpstream> upstream_;
    std::shared_ptr<ValidatingResolver> resolver_;
};

/// Loopback sockets: name server, validating resolver with its stub listener, and a stub
/// client per subscriber.
class UdpNetwork final : public Network {
public:
    UdpNetwork(EventLoop &loop, const Deployment &dep) : loop_(loop) {
        const Ipv4Address lo{0x7F000001};
        authority_ = std::make_shared<AuthoritativeServer>(dep.zones.zones);
        nameserver_ = std::make_unique<UdpResponder>(
            SocketAddress{lo, 0}, [a = authority_](ByteView q, const SocketAddress &) { return a->answer(q); });
        ResolverConfig rc;
        rc.anchor = dep.zones.anchor;
        resolver_ = std::make_shared<ValidatingResolver>(rc, std::make_shared<UdpUpstream>(nameserver_->local_address()));
        listener_ = std::make_unique<UdpResponder>(
            SocketAddress{lo, 0}, [r = resolver_](ByteView q, const SocketAddress &) { return r->handle_query(q); });
        stub_ = std::make_shared<StubResolverClient>(listener_->local_address());
    }

    std::unique_ptr<Transport> attach_subscriber(int) override {
        return std::make_unique<UdpTransport>(loop_, UdpTransportConfig{{Ipv4Address{0x7F000001}, 0}});
    }
    std::shared_ptr<ServiceResolver> subscriber_resolver() override { return stub_; }
    ResolveDispatch dispatch() const override { return ResolveDispatch::Worker; }
    std::uint64_t upstream_queries() const override { return authority_->queries_answered(); }

private:
    EventLoop &loop_;
    std::shared_ptr<AuthoritativeServer> authority_;
    std::unique_ptr<UdpResponder> nameserver_;
    std::shared_ptr<ValidatingResolver> resolver_;
    std::unique_ptr<UdpResponder> listener_;
    std::shared_ptr<StubResolverClient> stub_;
};

std::vector<double> collect(const std::vector<BenchSample> &samples, double BenchSample::*field, bool auth_only) {
    std::vector<double> out;
    for (const auto &s : samples)
        if (s.connected && (!auth_only || uses_auth(s.variant))) out.push_back(s.*field);
    return out;
}

double quantile(const std::vector<double> &sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string to_string(BenchTransport t) { return t == BenchTransport::Udp ? "udp" : "inproc"; }

BenchTransport parse_transport(std::string_view text) {
    if (text == "udp") return BenchTransport::Udp;
    if (text == "inproc") return BenchTransport::InProc;
    throw std::invalid_argument("unknown transport '" + std::string(text) + "' (expected udp or inproc)");
}

ServiceDescription reference_service() { return {0x0001, 0x0002, 1, 2}; }

EndpointInfo reference_endpoint() { return {Ipv4Address::parse("10.0.0.5"), L4Protocol::Udp, 30509}; }

Deployment Deployment::make(EndpointInfo endpoint, std::uint64_t seed, UnixTime now) {
    const std::string tag = std::to_string(seed);
    const auto digest = sha256(to_bytes("publisher-" + tag));
    Ed25519Key key = Ed25519Key::from_seed(ByteView(digest.data(), digest.size()));
    Bytes cert = make_self_signed_certificate(key, "someip-publisher");
    ServiceCatalog catalog;
    catalog.entries.push_back({reference_service(), endpoint, cert, {1}, {}});
    ZoneBundle zones = build_zones(catalog, ZoneKeys::derive("service-" + tag), ZoneKeys::derive("anchor-" + tag),
                                   default_validity(now));
    return {std::move(key), std::move(cert), std::move(catalog), std::move(zones)};
}

std::vector<double> BenchRun::discovery() const { return collect(samples, &BenchSample::discovery_ms, false); }
std::vector<double> BenchRun::subscription() const { return collect(samples, &BenchSample::subscription_ms, false); }
std::vector<double> BenchRun::sign_times() const { return collect(samples, &BenchSample::sign_ms, true); }
std::vector<double> BenchRun::verify_times() const { return collect(samples, &BenchSample::verify_ms, true); }

BenchRun run_benchmark(const BenchConfig &config) {
    if (config.samples <= 0) throw BenchError(BenchErrc::SetupFailure, "sample count must be positive");

    EventLoop loop(ClockMode::Realtime);
    BenchRun run;
    run.config = config;

    // The publisher's address must be known before the zone is signed.
    std::unique_ptr<Transport> pub_transport;
    std::unique_ptr<InProcNetwork> inproc;
    std::unique_ptr<Network> network;
    EndpointInfo endpoint = reference_endpoint();
    try {
        if (config.transport == BenchTransport::Udp) {
            pub_transport = std::make_unique<UdpTransport>(loop, UdpTransportConfig{{Ipv4Address{0x7F000001}, 0}});
            endpoint = {Ipv4Address{0x7F000001}, L4Protocol::Udp, pub_transport->local_address().port};
        }
    } catch (const NetError &e) {
        throw BenchError(BenchErrc::SetupFailure, e.what());
    }
    const Deployment dep = Deployment::make(endpoint, config.seed, system_now());
    try {
        if (config.transport == BenchTransport::Udp) {
            network = std::make_unique<UdpNetwork>(loop, dep);
        } else {
            auto net = std::make_unique<InProcNetwork>(loop, dep);
            pub_transport = net->bus().attach({endpoint.ip, endpoint.port});
            network = std::move(net);
        }
    } catch (const NetError &e) {
        throw BenchError(BenchErrc::SetupFailure, e.what());
    }

    NodeHost pub_host(loop, std::move(pub_transport));
    Publisher publisher(pub_host, PublisherConfig{config.mode, dep.entry(), dep.key, config.timing, config.seed});
    pub_host.bind(&publisher);
    publisher.start();

    const DnsName service = service_name(reference_service());
    if (uses_dns(config.mode)) {
        // The zone is already in the resolver's cache when sampling starts.
        auto resolver = network->subscriber_resolver();
        for (auto [name, type] : {std::pair{service, RRType::SVCB},
                                  std::pair{tlsa_owner_name(service, endpoint.port, endpoint.protocol), RRType::TLSA}}) {
            auto r = resolver->resolve(name, type);
            if (!r.secure())
                throw BenchError(BenchErrc::SetupFailure, "warm-up lookup of " + name.to_string() + " failed: " +
                                                              to_string(r.status) + " " + r.detail);
        }
    } else if (!loop.run_until([&] { return publisher.first_offer_at().has_value(); }, std::chrono::seconds(2))) {
        throw BenchError(BenchErrc::SetupFailure, "publisher never announced");
    }

    const std::uint64_t upstream_before = network->upstream_queries();
    std::uint64_t multicast = 0, dns_queries = 0;
    const std::uint64_t pub_multicast_before = pub_host.stats().multicast_sent;

    for (int i = 0; i < config.samples; ++i) {
        NodeHost host(loop, network->attach_subscriber(i), network->subscriber_resolver(), network->dispatch());
        SubscriberConfig sc;
        sc.mode = config.mode;
        sc.desired = reference_service();
        sc.pinned_certificate = dep.certificate;
        sc.timing = config.timing;
        sc.seed = config.seed + static_cast<std::uint64_t>(i);
        Subscriber subscriber(host, sc);
        host.bind(&subscriber);

        const std::size_t signs_before = publisher.stats().sign_times.size();
        subscriber.start();
        loop.run_until([&] { return subscriber.finished(); }, config.sample_timeout);

        const auto &rep = subscriber.report();
        BenchSample s;
        s.variant = config.mode;
        s.run_index = i;
        s.connected = rep.connected();
        s.initial_delay_ms = ms(rep.initial_delay);
        if (s.connected) {
            s.discovery_ms = ms(*rep.timing.discovery_latency());
            s.subscription_ms = ms(*rep.timing.subscription_latency());
            const auto &signs = publisher.stats().sign_times;
            for (std::size_t k = signs_before; k < signs.size(); ++k) s.sign_ms += ms(signs[k]);
            if (rep.verify_time) s.verify_ms = ms(*rep.verify_time);
        } else if (rep.failure) {
            s.failure = to_string(*rep.failure) + ": " + rep.detail;
        } else {
            s.failure = "timeout in " + to_string(rep.phase);
            ++run.timeouts;
        }
        run.samples.push_back(std::move(s));

        subscriber.stop();
        const NodeStats st = host.stats();
        multicast += st.multicast_sent;
        dns_queries += st.dns_queries;
    }

    multicast += pub_host.stats().multicast_sent - pub_multicast_before;
    run.traffic.sd_multicast = multicast;
    run.traffic.dns_queries = dns_queries + (network->upstream_queries() - upstream_before);
    publisher.stop();
    return run;
}

Summary summarize(std::vector<double> values) {
    if (values.empty()) throw BenchError(BenchErrc::EmptyInput, "no samples to summarize");
    std::sort(values.begin(), values.end());
    Summary s;
    s.count = values.size();
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const double iqr = s.q3 - s.q1;
    s.lower_fence = s.q1 - 1.5 * iqr;
    s.upper_fence = s.q3 + 1.5 * iqr;
    for (double v : values)
        if (v < s.lower_fence || v > s.upper_fence) s.outliers.push_back(v);
    return s;
}

void write_csv(std::ostream &out, const BenchRun &run) {
    out << "DISCOVERY_LATENCY,SUBSCRIPTION_LATENCY,SIGN_TIME,VERIFY_TIME,VARIANT,RUN,STATUS\n";
    out << std::fixed << std::setprecision(6);
    for (const auto &s : run.samples) {
        if (s.connected)
            out << s.discovery_ms << ',' << s.subscription_ms << ',' << s.sign_ms << ',' << s.verify_ms;
        else
            out << ",,,";
        out << ',' << to_string(s.variant) << ',' << s.run_index << ',' << (s.connected ? "connected" : "failed")
            << '\n';
    }
}

std::string format_summary_table(const std::vector<std::pair<std::string, Summary>> &rows) {
    std::size_t label_width = 5;
    for (const auto &[label, _] : rows) label_width = std::max(label_width, label.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(label_width)) << "what" << std::right;
    for (const char *h : {"n", "min", "q1", "median", "q3", "max", "outliers"}) out << std::setw(10) << h;
    out << '\n' << std::fixed << std::setprecision(3);
    for (const auto &[label, s] : rows) {
        out << std::left << std::setw(static_cast<int>(label_width)) << label << std::right << std::setw(10)
            << s.count;
        for (double v : {s.min, s.q1, s.median, s.q3, s.max}) out << std::setw(10) << v;
        out << std::setw(10) << s.outliers.size() << '\n';
    }
    return out.str();
}

}  // namespace sdsec
