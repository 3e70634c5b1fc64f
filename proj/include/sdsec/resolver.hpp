#pragma once

// Validating, caching stub resolver and its upstream transports.

#include "sdsec/dnssec.hpp"
#include "sdsec/udp.hpp"
#include "sdsec/zone.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>

namespace sdsec {

/// Carries one DNS exchange to the authoritative side.
class Upstream {
public:
    virtual ~Upstream() = default;
    /// nullopt when no matching answer arrived in time.
    virtual std::optional<Bytes> exchange(ByteView query, std::chrono::milliseconds timeout) = 0;
};

class UdpUpstream final : public Upstream {
public:
    explicit UdpUpstream(SocketAddress server) : server_(server) {}
    std::optional<Bytes> exchange(ByteView query, std::chrono::milliseconds timeout) override;

private:
    SocketAddress server_;
};

/// Calls an AuthoritativeServer directly. Can be severed to model lost connectivity.
class InProcessUpstream final : public Upstream {
public:
    explicit InProcessUpstream(std::shared_ptr<const AuthoritativeServer> server) : server_(std::move(server)) {}
    std::optional<Bytes> exchange(ByteView query, std::chrono::milliseconds timeout) override;

    void sever(bool severed = true) { severed_ = severed; }
    [[nodiscard]] std::uint64_t queries() const { return queries_.load(); }
    /// Applied to every answer before it is returned; for tamper tests.
    void set_filter(std::function<Bytes(Bytes)> filter);

private:
    std::shared_ptr<const AuthoritativeServer> server_;
    std::atomic<bool> severed_{false};
    std::atomic<std::uint64_t> queries_{0};
    std::mutex filter_mutex_;
    std::function<Bytes(Bytes)> filter_;
};

enum class ResolveStatus { Secure, NotFound, Bogus, UpstreamTimeout };

std::string to_string(ResolveStatus s);

struct ResolveResult {
    ResolveStatus status = ResolveStatus::NotFound;
    SignedRRset data;  // set only when Secure
    BogusReason reason = BogusReason::SignatureInvalid;
    std::string detail;
    bool from_cache = false;

    [[nodiscard]] bool secure() const { return status == ResolveStatus::Secure; }
};

/// What the engine sees of name resolution.
class ServiceResolver {
public:
    virtual ~ServiceResolver() = default;
    virtual ResolveResult resolve(const DnsName &name, RRType type) = 0;
};

struct ResolverConfig {
    TrustAnchor anchor;
    std::chrono::milliseconds timeout{500};
    int attempts = 2;
    /// Entries older than this fraction of their TTL are refreshed on access.
    double refresh_fraction = 0.75;
    std::function<UnixTime()> clock;  // defaults to the system clock
};

class ValidatingResolver final : public ServiceResolver {
public:
    struct Stats {
        std::uint64_t requests = 0;
        std::uint64_t cache_hits = 0;
        std::uint64_t upstream_queries = 0;
        std::uint64_t bogus = 0;
        std::uint64_t refreshes = 0;
    };

    ValidatingResolver(ResolverConfig config, std::shared_ptr<Upstream> upstream);

    ResolveResult resolve(const DnsName &name, RRType type) override;
    ResolveResult resolve(const DnsName &name, RRType type, UnixTime now);

    /// Stub-listener entry point: answers a client query from resolve(), setting AD on
    /// Secure data. Bogus answers and upstream failures become SERVFAIL.
    Bytes handle_query(ByteView query);

    [[nodiscard]] Stats stats() const;
    [[nodiscard]] std::size_t cache_size() const;
    void clear_cache();
    [[nodiscard]] const TrustAnchor &anchor() const { return config_.anchor; }

private:
    struct CacheEntry {
        SignedRRset data;
        UnixTime inserted_at;
        std::uint32_t ttl = 0;
    };
    using Key = std::pair<DnsName, std::uint16_t>;

    enum class FetchStatus { Ok, NotFound, Timeout, Failed };
    struct Fetched {
        FetchStatus status = FetchStatus::Failed;
        SignedRRset data;
        std::string detail;
    };

    ResolveResult fetch_and_validate(const DnsName &name, RRType type, UnixTime now);
    Fetched fetch(const DnsName &name, RRType type);
    std::optional<CacheEntry> cache_lookup(const Key &key, UnixTime now);
    void cache_insert(const SignedRRset &set, UnixTime now);
    UnixTime now() const;

    ResolverConfig config_;
    std::shared_ptr<Upstream> upstream_;

    mutable std::mutex mutex_;  // guards cache_, stats_ and rng_
    std::map<Key, CacheEntry> cache_;
    Stats stats_;
    std::mt19937 rng_;
};

/// Talks to a ValidatingResolver's stub listener and trusts its AD bit.
class StubResolverClient final : public ServiceResolver {
public:
    explicit StubResolverClient(SocketAddress resolver, std::chrono::milliseconds timeout = std::chrono::seconds(2))
        : resolver_(resolver), timeout_(timeout) {}

    ResolveResult resolve(const DnsName &name, RRType type) override;
    [[nodiscard]] std::uint64_t queries() const { return queries_.load(); }

private:
    SocketAddress resolver_;
    std::chrono::milliseconds timeout_;
    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint16_t> next_id_{1};
};

}  // namespace sdsec
