#include "support/world.hpp"

#include <doctest.h>

using namespace sdsec;
using namespace sdsec::testing;
using namespace std::chrono_literals;

namespace {

std::vector<SdMessage> sd_messages(const std::vector<TraceRecord> &trace) {
    std::vector<SdMessage> out;
    for (const auto &t : trace)
        if (is_sd_message(t.data)) out.push_back(decode_sd_message(t.data));
    return out;
}

Bytes flip_tlsa(Bytes raw) {
    auto m = decode_dns_message(raw);
    for (auto &rec : m.answers)
        if (rec.type == RRType::TLSA) rec.rdata[10] ^= 0x04;
    return encode_dns_message(m);
}

}  // namespace

TEST_CASE("every variant connects to the reference service") {
    for (auto mode : kAllVariants) {
        CAPTURE(to_string(mode));
        World w(mode);
        w.publisher->start();
        auto c = w.add_subscriber(0);
        c.sub->start();
        REQUIRE(w.run(*c.sub));
        const auto &rep = c.sub->report();
        CHECK(rep.connected());
        REQUIRE(rep.endpoint);
        CHECK(rep.endpoint->ip == Ipv4Address::parse("10.0.0.5"));
        CHECK(rep.endpoint->protocol == L4Protocol::Udp);
        CHECK(rep.endpoint->port == 30509);
        CHECK(rep.publisher == reference_service());
        CHECK(rep.timing.discovery_latency());
        CHECK(rep.timing.subscription_latency());
        CHECK(w.publisher->subscriber_count(1) == 1);
        CHECK(w.publisher->phase() == PublisherPhase::Serving);
        CHECK(rep.verify_time.has_value() == uses_auth(mode));
    }
}

TEST_CASE("first offer follows the initial delay window") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        World w(VariantMode::SomeIpSd, seed);
        w.publisher->start();
        w.loop.run_until([&] { return w.publisher->first_offer_at().has_value(); }, 1s);
        REQUIRE(w.publisher->first_offer_at());
        const auto d = *w.publisher->first_offer_at() - *w.publisher->started_at();
        CHECK(d >= 10ms);
        CHECK(d <= 100ms);
    }
}

TEST_CASE("cyclic offers repeat every second") {
    World w(VariantMode::SomeIpSd);
    w.publisher->start();
    w.loop.run_for(3500ms);
    CHECK(w.publisher->stats().offers_multicast == 4);
    CHECK(w.bus.multicast_datagrams() == 4);
}

TEST_CASE("DNSSEC publishers never announce") {
    for (auto mode : {VariantMode::Dnssec, VariantMode::DnssecDane}) {
        World w(mode);
        w.publisher->start();
        auto c = w.add_subscriber(0);
        c.sub->start();
        REQUIRE(w.run(*c.sub));
        w.loop.run_for(5s);
        CHECK(w.publisher->phase() == PublisherPhase::Serving);
        CHECK(w.publisher->stats().offers_multicast == 0);
        CHECK(w.publisher->stats().offers_unicast == 0);
        CHECK(w.bus.multicast_datagrams() == 0);
        CHECK_FALSE(w.publisher->first_offer_at());
    }
}

TEST_CASE("authenticated SubscribeAck carries a sig item") {
    World w(VariantMode::SomeIpSdAuth);
    w.bus.set_tracing(true);
    w.publisher->start();
    auto c = w.add_subscriber(0);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().connected());

    int acks = 0, subscribes = 0;
    for (const auto &m : sd_messages(w.bus.trace())) {
        for (const auto &e : m.entries) {
            auto opts = m.options_of(e);
            if (e.type == EntryType::SubscribeAck) {
                ++acks;
                REQUIRE(opts.size() == 1);
                const auto &cfg = std::get<ConfigOption>(*opts[0]);
                REQUIRE(cfg.find("sig"));
                CHECK(cfg.find("sig")->size() == 86);  // 64 bytes, unpadded base64
                CHECK_FALSE(e.service.minor_version);
            }
            if (e.type == EntryType::Subscribe) {
                ++subscribes;
                REQUIRE(opts.size() == 2);
                CHECK(std::holds_alternative<EndpointInfo>(*opts[0]));
                const auto &cfg = std::get<ConfigOption>(*opts[1]);
                REQUIRE(cfg.find("nonce"));
                CHECK(cfg.find("nonce")->size() == 2 * kDefaultNonceBytes);
            }
        }
    }
    CHECK(acks == 1);
    CHECK(subscribes == 1);
}

TEST_CASE("unauthenticated SubscribeAck has no options") {
    World w(VariantMode::SomeIpSd);
    w.bus.set_tracing(true);
    w.publisher->start();
    auto c = w.add_subscriber(0);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    for (const auto &m : sd_messages(w.bus.trace()))
        for (const auto &e : m.entries)
            if (e.type == EntryType::SubscribeAck || e.type == EntryType::Subscribe) {
                CHECK(m.options_of(e).size() == (e.type == EntryType::Subscribe ? 1u : 0u));
            }
}

TEST_CASE("tampered TLSA ends in a resolve failure") {
    World w(VariantMode::DnssecDane);
    w.upstream->set_filter(flip_tlsa);
    w.publisher->start();
    auto c = w.add_subscriber(0);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    const auto &rep = c.sub->report();
    CHECK(rep.phase == SubscriberPhase::Failed);
    CHECK(rep.failure == FailureKind::ResolveFailure);
    CHECK(rep.resolve_status == ResolveStatus::Bogus);
    w.loop.run_for(5s);
    CHECK_FALSE(c.sub->report().connected());
}

TEST_CASE("publisher with the wrong key is rejected") {
    for (auto mode : {VariantMode::SomeIpSdAuth, VariantMode::DnssecDane}) {
        CAPTURE(to_string(mode));
        World w(mode, 1, Ed25519Key::from_seed(Bytes(32, 0x77)));
        w.publisher->start();
        auto c = w.add_subscriber(0);
        c.sub->start();
        REQUIRE(w.run(*c.sub));
        const auto &rep = c.sub->report();
        CHECK(rep.failure == FailureKind::AuthFailure);
        CHECK(rep.reject_reason == RejectReason::BadSignature);
        CHECK(w.publisher->stats().acks == 1);
        w.loop.run_for(5s);
        CHECK_FALSE(c.sub->report().connected());
        CHECK(c.sub->received().empty());
    }
}

TEST_CASE("pinned certificate is required in sd-auth mode") {
    World w(VariantMode::SomeIpSdAuth);
    w.publisher->start();
    auto cfg = w.subscriber_config(3);
    cfg.pinned_certificate.reset();
    auto c = w.add_subscriber(0, cfg);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().failure == FailureKind::AuthFailure);
}

TEST_CASE("events reach each connected subscriber once") {
    for (int n : {0, 1, 3}) {
        CAPTURE(n);
        World w(VariantMode::Dnssec);
        w.publisher->start();
        std::vector<World::Client> clients;
        for (int i = 0; i < n; ++i) {
            clients.push_back(w.add_subscriber(i));
            clients.back().sub->start();
            REQUIRE(w.run(*clients.back().sub));
            REQUIRE(clients.back().sub->report().connected());
        }
        const auto unicast_before = w.bus.unicast_datagrams();
        const Bytes payload{0xDE, 0xAD, 0xBE, 0xEF, 0x00, 0x01};
        CHECK(w.publisher->publish(1, payload) == static_cast<std::size_t>(n));
        w.loop.run_for(100ms);
        CHECK(w.bus.unicast_datagrams() - unicast_before == static_cast<std::uint64_t>(n));
        for (auto &c : clients) {
            REQUIRE(c.sub->received().size() == 1);
            CHECK(c.sub->received()[0] == payload);
        }
        CHECK(w.publisher->publish(2, payload) == 0);
    }
}

TEST_CASE("StopSubscribe withdraws the subscription and lapsed ones expire") {
    World w(VariantMode::SomeIpSd);
    w.publisher->start();
    auto a = w.add_subscriber(0);
    auto b = w.add_subscriber(1);
    a.sub->start();
    b.sub->start();
    REQUIRE(w.run(*a.sub));
    REQUIRE(w.run(*b.sub));
    CHECK(w.publisher->subscriber_count(1) == 2);
    a.sub->stop();
    w.loop.run_for(10ms);
    CHECK(w.publisher->subscriber_count(1) == 1);
    w.loop.run_for(4s);  // subscription ttl is 3 s and is not renewed here
    CHECK(w.publisher->subscriber_count(1) == 0);
    CHECK(w.publisher->publish(1, Bytes{1}) == 0);
}

TEST_CASE("unknown eventgroup is answered with a negative ack") {
    for (auto mode : kAllVariants) {
        World w(mode);
        w.publisher->start();
        auto cfg = w.subscriber_config(5);
        cfg.eventgroup = 9;
        auto c = w.add_subscriber(0, cfg);
        c.sub->start();
        REQUIRE(w.run(*c.sub));
        CHECK(c.sub->report().failure == FailureKind::SubscriptionRejected);
        CHECK(w.publisher->stats().nacks == 1);
        CHECK(w.publisher->subscriber_count(9) == 0);
    }
}

TEST_CASE("mode isolation") {
    for (auto mode : kAllVariants) {
        CAPTURE(to_string(mode));
        World w(mode);
        w.publisher->start();
        std::uint64_t dns = 0;
        for (int i = 0; i < 5; ++i) {
            auto c = w.add_subscriber(i);
            c.sub->start();
            REQUIRE(w.run(*c.sub));
            CHECK(c.sub->report().connected());
            dns += c.host->stats().dns_queries;
        }
        w.loop.run_for(3s);
        if (uses_dns(mode)) {
            CHECK(w.bus.multicast_datagrams() == 0);
            CHECK(dns == (mode == VariantMode::DnssecDane ? 10u : 5u));
        } else {
            CHECK(w.bus.multicast_datagrams() > 0);
            CHECK(dns == 0);
            CHECK(w.upstream->queries() == 0);
        }
    }
}

TEST_CASE("virtual runs are reproducible") {
    for (auto mode : kAllVariants) {
        CAPTURE(to_string(mode));
        auto trace_of = [mode] {
            World w(mode, 42, std::nullopt, BusConfig{1ms, 2ms, 0.0, 9});
            w.bus.set_tracing(true);
            w.publisher->start();
            for (int i = 0; i < 3; ++i) {
                auto c = w.add_subscriber(i);
                c.sub->start();
                w.run(*c.sub);
                w.publisher->publish(1, Bytes{static_cast<std::uint8_t>(i)});
                w.loop.run_for(20ms);
            }
            return w.bus.trace();
        };
        auto a = trace_of();
        auto b = trace_of();
        CHECK(a.size() > 3);
        CHECK(a == b);
    }
}

TEST_CASE("sd discovery waits out the initial delay") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        World w(VariantMode::SomeIpSd, seed);
        w.publisher->start();
        w.loop.run_for(2s);
        auto c = w.add_subscriber(0);
        c.sub->start();
        REQUIRE(w.run(*c.sub));
        const auto &rep = c.sub->report();
        CHECK(rep.initial_delay >= 10ms);
        CHECK(rep.initial_delay <= 100ms);
        CHECK(*rep.timing.discovery_latency() >= rep.initial_delay);
    }
}

TEST_CASE("offer seen during the initial wait is used without a find") {
    World w(VariantMode::SomeIpSd, 7);
    w.bus.set_tracing(true);
    auto c = w.add_subscriber(0);
    w.publisher->start();
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().connected());
    int finds = 0;
    for (const auto &m : sd_messages(w.bus.trace()))
        for (const auto &e : m.entries) finds += e.type == EntryType::Find;
    const bool offered_first = *w.publisher->first_offer_at() <= *c.sub->report().timing.discovery_start +
                                                                     c.sub->report().initial_delay;
    CHECK(finds == (offered_first ? 0 : 1));
}

TEST_CASE("discovery times out without a publisher") {
    World w(VariantMode::SomeIpSd);
    auto c = w.add_subscriber(0);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().failure == FailureKind::DiscoveryTimeout);
    CHECK(c.host->stats().multicast_sent == 2);
}

TEST_CASE("lost packets end in a timeout rather than a hang") {
    World w(VariantMode::SomeIpSd, 1, std::nullopt, BusConfig{0ms, 0ms, 1.0, 3});
    w.publisher->start();
    auto c = w.add_subscriber(0);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().failure == FailureKind::DiscoveryTimeout);
    CHECK(w.bus.dropped() > 0);
}

TEST_CASE("subscribe timeout when the publisher goes quiet") {
    World w(VariantMode::Dnssec);
    // No publisher on the bus at all: the zone still names its endpoint.
    w.publisher.reset();
    w.pub_host.reset();
    auto c = w.add_subscriber(0);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().failure == FailureKind::SubscriptionTimeout);
}

TEST_CASE("late TLSA answers are waited for, within bounds") {
    for (auto [latency, connects] : {std::pair{30ms, true}, std::pair{2500ms, false}}) {
        CAPTURE(latency.count());
        World w(VariantMode::DnssecDane, 1, std::nullopt, BusConfig{1ms, 0ms, 0.0, 1});
        w.publisher->start();
        auto host = std::make_unique<NodeHost>(w.loop, w.bus.attach({Ipv4Address::parse("10.0.1.1"), 30490}),
                                               w.resolver, ResolveDispatch::Inline, latency);
        Subscriber sub(*host, w.subscriber_config(1));
        host->bind(&sub);
        SubscriberPhase seen = SubscriberPhase::Init;
        sub.start();
        w.loop.run_until(
            [&] {
                if (sub.phase() == SubscriberPhase::AwaitTlsa) seen = sub.phase();
                return sub.finished();
            },
            20s);
        CHECK(seen == SubscriberPhase::AwaitTlsa);
        CHECK(sub.report().connected() == connects);
        if (!connects) CHECK(sub.report().failure == FailureKind::AuthFailure);
    }
}

TEST_CASE("SVCB lookups follow the desired description") {
    World w(VariantMode::Dnssec);
    w.publisher->start();
    auto cfg = w.subscriber_config(2);
    cfg.desired = {0x0001, std::nullopt, std::nullopt, std::nullopt};
    auto c = w.add_subscriber(0, cfg);
    c.sub->start();
    REQUIRE(w.run(*c.sub));
    CHECK(c.sub->report().connected());
    CHECK(c.sub->report().publisher == reference_service());

    cfg.desired = {0x0002, std::nullopt, std::nullopt, std::nullopt};
    auto d = w.add_subscriber(1, cfg);
    d.sub->start();
    REQUIRE(w.run(*d.sub));
    CHECK(d.sub->report().failure == FailureKind::ResolveFailure);
    CHECK(d.sub->report().resolve_status == ResolveStatus::NotFound);
}

TEST_CASE("variant names") {
    for (auto m : kAllVariants) CHECK(parse_variant(to_string(m)) == m);
    CHECK_THROWS_AS(parse_variant("dane"), std::invalid_argument);
}

TEST_CASE("bus refuses a second node on the same address") {
    EventLoop loop(ClockMode::Virtual);
    InProcBus bus(loop);
    auto a = bus.attach({Ipv4Address::parse("10.0.0.1"), 1});
    CHECK_THROWS_AS(bus.attach({Ipv4Address::parse("10.0.0.1"), 1}), NetError);
    a.reset();
    CHECK_NOTHROW(bus.attach({Ipv4Address::parse("10.0.0.1"), 1}));
}

TEST_CASE("sd discovery over loopback UDP multicast") {
    EventLoop loop(ClockMode::Realtime);
    const Ipv4Address lo{0x7F000001};
    auto pub_transport = std::make_unique<UdpTransport>(loop, UdpTransportConfig{{lo, 0}});
    const EndpointInfo ep{lo, L4Protocol::Udp, pub_transport->local_address().port};
    const auto dep = Deployment::make(ep, 1, std::chrono::time_point_cast<std::chrono::seconds>(
                                                  std::chrono::system_clock::now()));
    NodeHost pub_host(loop, std::move(pub_transport));
    Publisher pub(pub_host, PublisherConfig{VariantMode::SomeIpSdAuth, dep.entry(), dep.key, {}, 1});
    pub_host.bind(&pub);

    NodeHost sub_host(loop, std::make_unique<UdpTransport>(loop, UdpTransportConfig{{lo, 0}}));
    SubscriberConfig sc;
    sc.mode = VariantMode::SomeIpSdAuth;
    sc.desired = reference_service();
    sc.pinned_certificate = dep.certificate;
    Subscriber sub(sub_host, sc);
    sub_host.bind(&sub);

    sub.start();  // before the publisher: discovery must go through find and a unicast offer
    loop.run_for(150ms);
    pub.start();
    REQUIRE(loop.run_until([&] { return sub.finished(); }, 5s));
    CHECK(sub.report().connected());
    CHECK(sub.report().endpoint == ep);
    CHECK(pub.stats().offers_unicast + pub.stats().offers_multicast >= 1);

    const Bytes payload{1, 2, 3};
    CHECK(pub.publish(1, payload) == 1);
    loop.run_until([&] { return !sub.received().empty(); }, 2s);
    REQUIRE(sub.received().size() == 1);
    CHECK(sub.received()[0] == payload);
}
