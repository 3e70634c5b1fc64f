#pragma once

// An in-process deployment on a virtual clock: bus, signed zones, validating resolver and a
// publisher of the reference service. Subscribers are added per test.

#include "sdsec/bench.hpp"

#include <memory>

namespace sdsec::testing {

struct World {
    struct Client {
        std::unique_ptr<NodeHost> host;
        std::unique_ptr<Subscriber> sub;
    };

    EventLoop loop{ClockMode::Virtual};
    InProcBus bus;
    Deployment dep;
    std::shared_ptr<AuthoritativeServer> authority;
    std::shared_ptr<InProcessUpstream> upstream;
    std::shared_ptr<ValidatingResolver> resolver;
    std::unique_ptr<NodeHost> pub_host;
    std::unique_ptr<Publisher> publisher;
    VariantMode mode;
    std::uint64_t seed;

    /// `publisher_key` replaces the key the certificate was issued for.
    explicit World(VariantMode m, std::uint64_t s = 1, std::optional<Ed25519Key> publisher_key = std::nullopt,
                   BusConfig bus_config = {})
        : bus(loop, bus_config),
          dep(Deployment::make(reference_endpoint(), s,
                               std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()))),
          mode(m),
          seed(s) {
        authority = std::make_shared<AuthoritativeServer>(dep.zones.zones);
        upstream = std::make_shared<InProcessUpstream>(authority);
        ResolverConfig rc;
        rc.anchor = dep.zones.anchor;
        resolver = std::make_shared<ValidatingResolver>(rc, upstream);
        const auto ep = dep.entry().endpoint;
        pub_host = std::make_unique<NodeHost>(loop, bus.attach({ep.ip, ep.port}));
        publisher = std::make_unique<Publisher>(
            *pub_host, PublisherConfig{mode, dep.entry(), publisher_key ? *publisher_key : dep.key, {}, seed});
        pub_host->bind(publisher.get());
    }

    SubscriberConfig subscriber_config(std::uint64_t sub_seed) const {
        SubscriberConfig sc;
        sc.mode = mode;
        sc.desired = reference_service();
        sc.pinned_certificate = dep.certificate;
        sc.nonces = std::make_shared<SeededNonceSource>(sub_seed);
        sc.seed = sub_seed;
        return sc;
    }

    Client add_subscriber(int index, std::optional<SubscriberConfig> cfg = std::nullopt) {
        Client c;
        const Ipv4Address ip{0x0A000100u + static_cast<std::uint32_t>(index + 1)};
        c.host = std::make_unique<NodeHost>(loop, bus.attach({ip, 30490}), resolver);
        c.sub = std::make_unique<Subscriber>(*c.host, cfg ? *cfg : subscriber_config(seed * 1000 + index));
        c.host->bind(c.sub.get());
        return c;
    }

    bool run(const Subscriber &sub, Duration limit = std::chrono::seconds(10)) {
        return loop.run_until([&] { return sub.finished(); }, limit);
    }
};

}  // namespace sdsec::testing
