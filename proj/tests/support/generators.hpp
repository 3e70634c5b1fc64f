#pragma once

// Seeded random value generators shared by the property tests and the acceptance suite.

#include "sdsec/dns.hpp"
#include "sdsec/sd_wire.hpp"

#include <random>
#include <string>

namespace sdsec::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64 &rng() { return rng_; }

    template <class T>
    T uniform(T lo, T hi) {
        return static_cast<T>(std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_));
    }
    bool coin() { return uniform<int>(0, 1) == 1; }

    Bytes bytes(std::size_t lo, std::size_t hi) {
        Bytes out(uniform<std::size_t>(lo, hi));
        for (auto &b : out) b = uniform<std::uint8_t>(0, 255);
        return out;
    }

    ServiceDescription concrete_service() {
        return {uniform<std::uint16_t>(0, 0xFFFF), uniform<std::uint16_t>(0, 0xFFFE),
                uniform<std::uint8_t>(0, 0xFE), uniform<std::uint32_t>(0, 0xFFFFFFFE)};
    }

    ServiceDescription any_service(bool with_minor) {
        ServiceDescription d = concrete_service();
        if (coin()) d.instance_id.reset();
        if (coin()) d.major_version.reset();
        if (!with_minor || coin()) d.minor_version.reset();
        return d;
    }

    EndpointInfo endpoint() {
        return {Ipv4Address{uniform<std::uint32_t>(0, 0xFFFFFFFF)}, coin() ? L4Protocol::Udp : L4Protocol::Tcp,
                uniform<std::uint16_t>(1, 0xFFFF)};
    }

    ConfigOption config() {
        ConfigOption c;
        int n = uniform<int>(0, 4);
        for (int i = 0; i < n; ++i) {
            std::string key = "k" + std::to_string(i);
            for (int j = uniform<int>(0, 6); j > 0; --j) key.push_back(static_cast<char>(uniform<int>('a', 'z')));
            c.items.push_back({key, bytes(0, 255 - key.size() - 1)});
        }
        return c;
    }

    SdMessage sd_message() {
        SdMessage m;
        m.session_id = uniform<std::uint16_t>(0, 0xFFFF);
        m.reboot_flag = coin();
        m.unicast_flag = coin();
        int n_opts = uniform<int>(0, 6);
        for (int i = 0; i < n_opts; ++i) {
            if (coin()) m.options.emplace_back(endpoint());
            else m.options.emplace_back(config());
        }
        int n_entries = uniform<int>(0, 5);
        for (int i = 0; i < n_entries; ++i) {
            SdEntry e;
            e.type = std::array{EntryType::Find, EntryType::Offer, EntryType::Subscribe,
                                EntryType::SubscribeAck}[uniform<int>(0, 3)];
            e.service = any_service(!e.is_eventgroup_entry());
            if (e.is_eventgroup_entry()) e.eventgroup_id = uniform<std::uint16_t>(0, 0xFFFF);
            e.ttl_seconds = uniform<std::uint32_t>(0, kMaxTtl);
            // Pick option runs compatible with the entry's endpoint requirements.
            for (int attempt = 0; attempt < 20; ++attempt) {
                e.first_run = run(m.options.size());
                e.second_run = run(m.options.size());
                std::size_t endpoints = 0;
                for (const auto *opt : m.options_of(e))
                    if (std::holds_alternative<EndpointInfo>(*opt)) ++endpoints;
                bool ok = e.type == EntryType::Find           ? endpoints == 0
                          : e.type == EntryType::SubscribeAck ? true
                                                              : endpoints > 0;
                if (ok) {
                    m.entries.push_back(e);
                    break;
                }
            }
        }
        return m;
    }

    SvcbServiceRecord svcb() {
        SvcbServiceRecord r;
        r.priority = uniform<std::uint16_t>(1, 0xFFFF);
        r.port = uniform<std::uint16_t>(1, 0xFFFF);
        r.ipv4hint.value = uniform<std::uint32_t>(0, 0xFFFFFFFF);
        r.protocol = coin() ? L4Protocol::Udp : L4Protocol::Tcp;
        r.instance = uniform<std::uint16_t>(0, 0xFFFF);
        r.major = uniform<std::uint8_t>(0, 0xFF);
        r.minor = uniform<std::uint32_t>(0, 0xFFFFFFFF);
        if (coin()) r.target = DnsName::parse("host" + std::to_string(uniform<int>(0, 999)) + ".example.");
        return r;
    }

    TlsaCertRecord tlsa() { return {3, 0, 0, bytes(1, 600)}; }

    DnsName name() {
        std::vector<std::string> labels;
        for (int i = uniform<int>(0, 4); i > 0; --i) {
            std::string l;
            for (int j = uniform<int>(1, 12); j > 0; --j) l.push_back(static_cast<char>(uniform<int>('a', 'z')));
            labels.push_back(l);
        }
        return DnsName::from_labels(labels);
    }

    DnsMessage dns_message() {
        DnsMessage m;
        m.id = uniform<std::uint16_t>(0, 0xFFFF);
        m.qr = coin();
        m.aa = coin();
        m.rd = coin();
        m.ad = coin();
        m.rcode = static_cast<Rcode>(uniform<int>(0, 5));
        m.questions.push_back({name(), coin() ? RRType::SVCB : RRType::TLSA, kClassIN});
        for (int i = uniform<int>(0, 4); i > 0; --i)
            m.answers.push_back({name(), coin() ? RRType::SVCB : RRType::RRSIG, kClassIN,
                                 uniform<std::uint32_t>(0, 86400), bytes(0, 64)});
        m.edns = coin();
        m.dnssec_ok = m.edns && coin();
        m.udp_payload_size = m.edns ? uniform<std::uint16_t>(512, 4096) : 4096;
        return m;
    }

    /// Copies `buf` with one random mutation: bit flip, truncation, insertion or deletion.
    Bytes mutate(const Bytes &buf) {
        Bytes out = buf;
        int kind = uniform<int>(0, 3);
        if (out.empty()) kind = 2;
        switch (kind) {
        case 0: {
            auto i = uniform<std::size_t>(0, out.size() - 1);
            out[i] ^= static_cast<std::uint8_t>(1u << uniform<int>(0, 7));
            break;
        }
        case 1: out.resize(uniform<std::size_t>(0, out.size() - 1)); break;
        case 2: out.insert(out.begin() + static_cast<long>(uniform<std::size_t>(0, out.size())), uniform<std::uint8_t>(0, 255)); break;
        default: out.erase(out.begin() + static_cast<long>(uniform<std::size_t>(0, out.size() - 1))); break;
        }
        return out;
    }

private:
    OptionRun run(std::size_t n_options) {
        if (n_options == 0 || coin()) return {};
        auto index = uniform<std::size_t>(0, n_options - 1);
        auto count = uniform<std::size_t>(1, std::min<std::size_t>(15, n_options - index));
        return {static_cast<std::uint8_t>(index), static_cast<std::uint8_t>(count)};
    }

    std::mt19937_64 rng_;
};

}  // namespace sdsec::testing
