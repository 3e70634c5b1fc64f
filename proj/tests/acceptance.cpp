// Acceptance checks. One PASS/FAIL line per criterion; exit status is the number of failures.

#include "support/generators.hpp"
#include "support/world.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace sdsec;
using namespace sdsec::testing;
using namespace std::chrono_literals;

namespace {

// Pinned limits.
constexpr int kRandomServices = 1000;
constexpr double kNamespaceSeconds = 1.0;
constexpr int kCodecValues = 10000;
constexpr double kCodecSeconds = 30.0;
constexpr int kFlipsPerTarget = 40;  // 4 targets -> 160 cases
constexpr int kWrongKeyTrials = 100;
constexpr int kBenchSamples = 50;
constexpr std::uint64_t kBenchSeed = 1;
constexpr double kSdDelayMinMs = 10.0;
constexpr double kSdDelayMaxMs = 100.0;
constexpr double kOverheadMs = 10.0;
constexpr double kSuiteSeconds = 300.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

UnixTime unix_now() {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

// --- 1 ----------------------------------------------------------------------------

Outcome namespace_cardinality() {
    const auto t0 = std::chrono::steady_clock::now();
    Gen gen(1001);
    int bad = 0;
    for (int i = 0; i < kRandomServices; ++i) {
        const auto names = enumerate_valid_names(gen.concrete_service());
        std::set<std::string> distinct;
        for (const auto &n : names) distinct.insert(n.to_string());
        if (names.size() != 6 || distinct.size() != 6) ++bad;
    }
    int invalid_rejected = 0;
    for (ServiceDescription invalid : {ServiceDescription{1, std::nullopt, std::nullopt, 2},
                                    ServiceDescription{1, 2, std::nullopt, 2}}) {
        try {
            to_query_name(invalid);
        } catch (const NamespaceError &e) {
            invalid_rejected += e.code() == NamespaceErrc::InvalidCombination;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << kRandomServices - bad << "/" << kRandomServices << " services with 6 distinct names, " << invalid_rejected
      << "/2 invalid combinations rejected, " << secs << " s";
    return {bad == 0 && invalid_rejected == 2 && secs < kNamespaceSeconds, d.str()};
}

// --- 2 ----------------------------------------------------------------------------

Outcome query_name_fidelity() {
    const std::string expected = "_someip.minor0x00000002.major0x01.instance0x0002.id0x0001.service.";
    const std::string got = to_query_name({1, 2, 1, 2}).to_string();
    return {got == expected, got};
}

// --- 3 ----------------------------------------------------------------------------

Outcome svcb_fidelity() {
    const auto dep = Deployment::make(reference_endpoint(), 3, unix_now());
    AuthoritativeServer server(dep.zones.zones);
    SvcbServiceRecord want;
    want.port = 30509;
    want.ipv4hint = Ipv4Address::parse("10.0.0.5");
    want.protocol = L4Protocol::Udp;
    want.instance = 2;
    want.major = 1;
    want.minor = 2;
    int ok = 0, total = 0;
    std::uint16_t id = 1;
    for (const auto &qn : enumerate_valid_names(reference_service())) {
        ++total;
        const auto reply = decode_dns_message(server.answer(encode_dns_query(qn.to_dns_name(), RRType::SVCB, id++)));
        int matching = 0, svcb = 0;
        for (const auto &rec : reply.answers) {
            if (rec.type != RRType::SVCB) continue;
            ++svcb;
            const auto r = decode_service_svcb(rec.rdata);
            matching += r.port == want.port && r.ipv4hint == want.ipv4hint && r.protocol == want.protocol &&
                        r.instance == want.instance && r.major == want.major && r.minor == want.minor;
        }
        ok += reply.rcode == Rcode::NoError && svcb == 1 && matching == 1;
    }
    return {ok == 6 && total == 6, std::to_string(ok) + "/" + std::to_string(total) + " names answer the reference record"};
}

// --- 4 ----------------------------------------------------------------------------

Outcome codec_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    Gen gen(4004);
    int mismatches = 0, rejected = 0, accepted = 0, untyped = 0;

    auto mutated = [&](const Bytes &wire, const std::function<void(const Bytes &)> &decode) {
        const Bytes bad = gen.mutate(wire);
        try {
            decode(bad);
            ++accepted;
        } catch (const WireError &) {
            ++rejected;
        } catch (const DnsError &) {
            ++rejected;
        } catch (...) {
            ++untyped;
        }
    };

    for (int i = 0; i < kCodecValues; ++i) {
        const SdMessage sd = gen.sd_message();
        const Bytes sd_wire = encode_sd_message(sd);
        mismatches += !(decode_sd_message(sd_wire) == sd);
        mutated(sd_wire, [](const Bytes &b) { decode_sd_message(b); });

        const SvcbServiceRecord svcb = gen.svcb();
        const Bytes svcb_wire = encode_svcb_rdata(svcb);
        mismatches += !(decode_service_svcb(svcb_wire) == svcb);
        mutated(svcb_wire, [](const Bytes &b) { decode_service_svcb(b); });

        const TlsaCertRecord tlsa = gen.tlsa();
        const Bytes tlsa_wire = encode_tlsa_rdata(tlsa);
        mismatches += !(decode_tlsa_rdata(tlsa_wire) == tlsa);
        mutated(tlsa_wire, [](const Bytes &b) { decode_tlsa_rdata(b); });

        const DnsMessage dns = gen.dns_message();
        const Bytes dns_wire = encode_dns_message(dns);
        mismatches += !(decode_dns_message(dns_wire) == dns);
        mutated(dns_wire, [](const Bytes &b) { decode_dns_message(b); });
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << 4 * kCodecValues << " values, " << mismatches << " round-trip mismatches; " << 4 * kCodecValues
      << " mutated buffers: " << rejected << " typed errors, " << accepted << " decoded, " << untyped
      << " other failures; " << secs << " s";
    return {mismatches == 0 && untyped == 0 && rejected > 0 && secs < kCodecSeconds, d.str()};
}

// --- 5 ----------------------------------------------------------------------------

/// service. (anchor) -> signed DS -> oem.service. holding the leaf SVCB set.
struct Chain {
    DnsName parent_origin = DnsName::parse("service.");
    DnsName child_origin = DnsName::parse("oem.service.");
    ZoneKeys parent_keys = ZoneKeys::derive("acceptance-parent");
    ZoneKeys child_keys = ZoneKeys::derive("acceptance-child");
    ValidityWindow window;
    SignedRRset leaf;
    std::vector<ZoneCut> cuts;
    TrustAnchor anchor;

    static SignedRRset sign(ResourceRecordSet set, const ZoneSigningKey &key, const DnsName &signer, ValidityWindow w) {
        set.canonicalize();
        SignedRRset s{set, {}};
        s.rrsigs.push_back(encode_rrsig_rdata(sign_rrset(s.rrset, key, signer, w)));
        return s;
    }

    SignedRRset dnskeys(const DnsName &origin, const ZoneKeys &keys) const {
        return sign({origin, RRType::DNSKEY, kClassIN, 3600,
                     {encode_dnskey_rdata(keys.ksk.dnskey), encode_dnskey_rdata(keys.zsk.dnskey)}},
                    keys.ksk, origin, window);
    }

    Chain(UnixTime now, ValidityWindow leaf_window) : window(default_validity(now)) {
        SvcbServiceRecord rec;
        rec.port = 30509;
        rec.ipv4hint = Ipv4Address::parse("10.0.0.5");
        rec.instance = 2;
        rec.major = 1;
        rec.minor = 2;
        leaf = sign({DnsName::parse("_someip.id0x0001.oem.service."), RRType::SVCB, kClassIN, 3600,
                     {encode_svcb_rdata(rec)}},
                    child_keys.zsk, child_origin, leaf_window);
        ZoneCut child{child_origin, dnskeys(child_origin, child_keys), std::nullopt};
        child.ds = sign({child_origin, RRType::DS, kClassIN, 3600,
                         {encode_ds_rdata(compute_ds(child_origin, child_keys.ksk.dnskey))}},
                        parent_keys.zsk, parent_origin, window);
        cuts = {child, ZoneCut{parent_origin, dnskeys(parent_origin, parent_keys), std::nullopt}};
        anchor = {parent_origin, compute_ds(parent_origin, parent_keys.ksk.dnskey)};
    }
};

void flip(Bytes &b, int k, int of) {
    const std::size_t bits = b.size() * 8;
    const std::size_t bit = (bits * static_cast<std::size_t>(k)) / static_cast<std::size_t>(of);
    b[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
}

Outcome dnssec_tamper() {
    const UnixTime now = unix_now();
    const Chain base(now, default_validity(now));
    const bool clean = validate_chain(base.leaf, base.cuts, base.anchor, now).secure;

    std::map<std::string, std::pair<int, int>> tally;  // target -> (bogus, cases)
    auto record = [&](const std::string &target, const Chain &c) {
        auto &[bogus, cases] = tally[target];
        ++cases;
        bogus += !validate_chain(c.leaf, c.cuts, c.anchor, now).secure;
    };
    for (int k = 0; k < kFlipsPerTarget; ++k) {
        Chain c = base;
        flip(c.leaf.rrset.rdatas[0], k, kFlipsPerTarget);
        record("leaf", c);

        c = base;
        flip(c.leaf.rrsigs[0], k, kFlipsPerTarget);
        record("rrsig", c);

        c = base;
        auto &keys = c.cuts[k % 2].dnskeys.rrset.rdatas;
        flip(keys[(k / 2) % keys.size()], k, kFlipsPerTarget);
        record("dnskey", c);

        c = base;
        if (k % 2 == 0) {
            flip(c.cuts[0].ds->rrset.rdatas[0], k, kFlipsPerTarget);
        } else {
            Bytes ds = encode_ds_rdata(c.anchor.ds);
            flip(ds, k, kFlipsPerTarget);
            c.anchor.ds = decode_ds_rdata(ds);
        }
        record("ds", c);
    }

    const auto hour = std::chrono::hours(1);
    const Chain expired(now, {now - 48 * hour, now - 24 * hour});
    const Chain future(now, {now + 24 * hour, now + 48 * hour});
    const auto e = validate_chain(expired.leaf, expired.cuts, expired.anchor, now);
    const auto f = validate_chain(future.leaf, future.cuts, future.anchor, now);
    // The whole chain evaluated after its validity has lapsed.
    const auto lapsed = validate_chain(base.leaf, base.cuts, base.anchor, now + 24 * 40 * hour);
    const bool windows = !e.secure && e.reason == BogusReason::Expired && !f.secure &&
                         f.reason == BogusReason::NotYetValid && !lapsed.secure;

    int bogus = 0, cases = 0;
    std::ostringstream d;
    for (const auto &[target, t] : tally) {
        bogus += t.first;
        cases += t.second;
        d << target << " " << t.first << "/" << t.second << ", ";
    }
    d << "total " << bogus << "/" << cases << " bogus; untampered " << (clean ? "secure" : "NOT secure")
      << "; expired/not-yet-valid " << (windows ? "rejected" : "NOT rejected");
    return {clean && windows && cases >= 100 && bogus == cases, d.str()};
}

// --- 6 ----------------------------------------------------------------------------

Outcome offline_cache() {
    World w(VariantMode::DnssecDane, 6);
    const DnsName svc = service_name(reference_service());
    const auto ep = reference_endpoint();
    const bool warm = w.resolver->resolve(svc, RRType::SVCB).secure() &&
                      w.resolver->resolve(tlsa_owner_name(svc, ep.port, ep.protocol), RRType::TLSA).secure();
    w.upstream->sever();
    const auto before = w.upstream->queries();
    w.publisher->start();
    auto c = w.add_subscriber(0);
    c.sub->start();
    w.run(*c.sub);
    const auto &rep = c.sub->report();
    std::ostringstream d;
    d << "warm " << (warm ? "yes" : "no") << ", upstream severed, subscriber "
      << (rep.connected() ? "Connected" : to_string(rep.phase) + " " + rep.detail) << ", cache hits "
      << w.resolver->stats().cache_hits << ", upstream attempts while severed " << w.upstream->queries() - before;
    return {warm && rep.connected() && rep.verify_time.has_value(), d.str()};
}

// --- 7 ----------------------------------------------------------------------------

Outcome auth_gate() {
    bool honest = false;
    {
        World w(VariantMode::DnssecDane, 7);
        w.publisher->start();
        auto c = w.add_subscriber(0);
        c.sub->start();
        w.run(*c.sub);
        honest = c.sub->report().connected() && c.sub->report().verify_time.has_value();
    }
    int rejected = 0, connected = 0;
    for (int i = 0; i < kWrongKeyTrials; ++i) {
        Bytes seed(32);
        for (std::size_t j = 0; j < seed.size(); ++j) seed[j] = static_cast<std::uint8_t>(i * 31 + j * 7 + 1);
        World w(VariantMode::DnssecDane, 700 + static_cast<std::uint64_t>(i), Ed25519Key::from_seed(seed));
        w.publisher->start();
        auto c = w.add_subscriber(0);
        c.sub->start();
        w.run(*c.sub);
        w.loop.run_for(5s);  // nothing may flip it to Connected afterwards
        const auto &rep = c.sub->report();
        connected += rep.connected();
        rejected += rep.failure == FailureKind::AuthFailure && rep.reject_reason == RejectReason::BadSignature;
    }
    std::ostringstream d;
    d << "honest run " << (honest ? "Connected" : "NOT connected") << "; impostor rejected " << rejected << "/"
      << kWrongKeyTrials << ", connected " << connected;
    return {honest && rejected == kWrongKeyTrials && connected == 0, d.str()};
}

// --- 8, 9 -------------------------------------------------------------------------

double median_of(const std::vector<double> &v) { return v.empty() ? 0.0 : summarize(v).median; }

std::map<VariantMode, BenchRun> run_all_variants(double &secs) {
    const auto t0 = std::chrono::steady_clock::now();
    std::map<VariantMode, BenchRun> runs;
    for (auto mode : kAllVariants) {
        BenchConfig cfg;
        cfg.mode = mode;
        cfg.samples = kBenchSamples;
        cfg.seed = kBenchSeed;
        cfg.transport = BenchTransport::InProc;
        runs[mode] = run_benchmark(cfg);
    }
    secs = seconds_since(t0);
    return runs;
}

Outcome benchmark_shape(const std::map<VariantMode, BenchRun> &runs, double bench_secs, double suite_secs) {
    std::ostringstream d;
    d.precision(4);
    bool all_connected = true;
    for (const auto &[mode, run] : runs)
        all_connected = all_connected && run.discovery().size() == static_cast<std::size_t>(kBenchSamples);

    const auto sd = summarize(runs.at(VariantMode::SomeIpSd).discovery());
    const bool a = sd.min >= kSdDelayMinMs && sd.max <= kSdDelayMaxMs + kOverheadMs;
    d << "(a) someip-sd discovery [" << sd.min << ", " << sd.max << "] ms " << (a ? "ok" : "FAIL");

    const double dnssec_median = median_of(runs.at(VariantMode::Dnssec).discovery());
    const bool b = dnssec_median < sd.min;
    d << "; (b) dnssec discovery median " << dnssec_median << " < " << sd.min << " " << (b ? "ok" : "FAIL");

    bool c = true;
    d << "; (c)";
    for (auto [authed, plain] : {std::pair{VariantMode::SomeIpSdAuth, VariantMode::SomeIpSd},
                                 std::pair{VariantMode::DnssecDane, VariantMode::Dnssec}}) {
        const double auth_med = median_of(runs.at(authed).subscription());
        const double plain_med = median_of(runs.at(plain).subscription());
        const double sign_med = median_of(runs.at(authed).sign_times());
        const bool ok = plain_med < auth_med && auth_med - plain_med >= sign_med && sign_med > 0;
        c = c && ok;
        d << " " << to_string(authed) << " " << auth_med << " vs " << to_string(plain) << " " << plain_med
          << " (sign " << sign_med << ") " << (ok ? "ok" : "FAIL") << ";";
    }
    const bool fast = suite_secs < kSuiteSeconds;
    d << " all samples connected: " << (all_connected ? "yes" : "NO") << "; bench " << bench_secs << " s, suite "
      << suite_secs << " s";
    return {all_connected && a && b && c && fast, d.str()};
}

Outcome mode_isolation(const std::map<VariantMode, BenchRun> &runs) {
    std::ostringstream d;
    bool ok = true;
    for (const auto &[mode, run] : runs) {
        const bool isolated = uses_dns(mode) ? run.traffic.sd_multicast == 0 : run.traffic.dns_queries == 0;
        ok = ok && isolated;
        d << to_string(mode) << ": " << run.traffic.sd_multicast << " SD multicast, " << run.traffic.dns_queries
          << " DNS queries; ";
    }
    return {ok, d.str()};
}

}  // namespace

int main() {
    const auto suite_start = std::chrono::steady_clock::now();
    int failures = 0;
    auto report = [&](int n, const char *name, const std::function<Outcome()> &fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "namespace cardinality", namespace_cardinality);
    report(2, "query-name fidelity", query_name_fidelity);
    report(3, "SVCB fidelity", svcb_fidelity);
    report(4, "codec round trip", codec_round_trip);
    report(5, "DNSSEC tamper suite", dnssec_tamper);
    report(6, "offline cache", offline_cache);
    report(7, "auth gate", auth_gate);

    std::map<VariantMode, BenchRun> runs;
    double bench_secs = 0;
    std::string bench_error;
    try {
        runs = run_all_variants(bench_secs);
    } catch (const std::exception &e) {
        bench_error = e.what();
    }
    report(8, "benchmark shape", [&]() -> Outcome {
        if (!bench_error.empty()) return {false, bench_error};
        return benchmark_shape(runs, bench_secs, seconds_since(suite_start));
    });
    report(9, "mode isolation", [&]() -> Outcome {
        if (!bench_error.empty()) return {false, bench_error};
        return mode_isolation(runs);
    });
    return failures;
}
