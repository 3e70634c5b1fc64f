#include "sdsec/resolver.hpp"

#include <algorithm>

namespace sdsec {

namespace {

constexpr int kMaxChainDepth = 8;

std::optional<DnsName> signer_of(const SignedRRset &set) {
    for (const auto &raw : set.rrsigs) {
        try {
            return decode_rrsig_rdata(raw).signer;
        } catch (const DnsError &) {
        }
    }
    return std::nullopt;
}

std::uint16_t message_id(ByteView buf) { return buf.size() < 2 ? 0 : static_cast<std::uint16_t>(buf[0] << 8 | buf[1]); }

Bytes formerr_for(ByteView query) {
    DnsMessage resp;
    resp.id = message_id(query);
    resp.qr = true;
    resp.rcode = Rcode::FormErr;
    return encode_dns_message(resp);
}

}  // namespace

std::string to_string(ResolveStatus s) {
    switch (s) {
    case ResolveStatus::Secure: return "Secure";
    case ResolveStatus::NotFound: return "NotFound";
    case ResolveStatus::Bogus: return "Bogus";
    case ResolveStatus::UpstreamTimeout: return "UpstreamTimeout";
    }
    return "?";
}

// --- upstreams ----------------------------------------------------------------

std::optional<Bytes> UdpUpstream::exchange(ByteView query, std::chrono::milliseconds timeout) {
    auto sock = UdpSocket::bind({Ipv4Address{0}, 0});
    sock.send_to(server_, query);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    const std::uint16_t id = message_id(query);
    for (;;) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        auto d = sock.receive(left);
        if (!d) continue;
        if (d->from == server_ && message_id(d->data) == id) return std::move(d->data);
    }
}

std::optional<Bytes> InProcessUpstream::exchange(ByteView query, std::chrono::milliseconds) {
    ++queries_;
    if (severed_) return std::nullopt;
    Bytes answer = server_->answer(query);
    if (answer.empty()) return std::nullopt;
    std::lock_guard lock(filter_mutex_);
    if (filter_) answer = filter_(std::move(answer));
    return answer;
}

void InProcessUpstream::set_filter(std::function<Bytes(Bytes)> filter) {
    std::lock_guard lock(filter_mutex_);
    filter_ = std::move(filter);
}

// --- validating resolver ------------------------------------------------------

ValidatingResolver::ValidatingResolver(ResolverConfig config, std::shared_ptr<Upstream> upstream)
    : config_(std::move(config)), upstream_(std::move(upstream)), rng_(std::random_device{}()) {
    config_.anchor.zone = config_.anchor.zone.lowercase();
    if (config_.attempts < 1) config_.attempts = 1;
}

UnixTime ValidatingResolver::now() const {
    if (config_.clock) return config_.clock();
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

ResolveResult ValidatingResolver::resolve(const DnsName &name, RRType type) { return resolve(name, type, now()); }

ResolveResult ValidatingResolver::resolve(const DnsName &name, RRType type, UnixTime at) {
    const DnsName qname = name.lowercase();
    {
        std::lock_guard lock(mutex_);
        ++stats_.requests;
    }
    if (auto hit = cache_lookup({qname, static_cast<std::uint16_t>(type)}, at)) {
        const auto age = at - hit->inserted_at;
        if (age.count() > config_.refresh_fraction * hit->ttl) {
            {
                std::lock_guard lock(mutex_);
                ++stats_.refreshes;
            }
            auto fresh = fetch_and_validate(qname, type, at);
            if (fresh.secure()) return fresh;
        }
        std::lock_guard lock(mutex_);
        ++stats_.cache_hits;
        ResolveResult r;
        r.status = ResolveStatus::Secure;
        r.data = std::move(hit->data);
        r.from_cache = true;
        return r;
    }
    return fetch_and_validate(qname, type, at);
}

ValidatingResolver::Fetched ValidatingResolver::fetch(const DnsName &name, RRType type) {
    std::uint16_t id;
    {
        std::lock_guard lock(mutex_);
        id = static_cast<std::uint16_t>(rng_());
    }
    const Bytes query = encode_dns_query(name, type, id);
    for (int attempt = 0; attempt < config_.attempts; ++attempt) {
        {
            std::lock_guard lock(mutex_);
            ++stats_.upstream_queries;
        }
        std::optional<Bytes> raw;
        try {
            raw = upstream_->exchange(query, config_.timeout);
        } catch (const NetError &) {
            raw.reset();
        }
        if (!raw) continue;

        DnsResponse resp;
        try {
            resp = decode_dns_response(*raw, id);
        } catch (const std::exception &e) {
            return {FetchStatus::Failed, {}, std::string("malformed response: ") + e.what()};
        }
        if (resp.rcode == Rcode::NxDomain) return {FetchStatus::NotFound, {}, "NXDOMAIN"};
        if (resp.rcode != Rcode::NoError) return {FetchStatus::Timeout, {}, "upstream answered " + to_string(resp.rcode)};
        for (auto &set : resp.rrsets)
            if (set.rrset.owner == name && set.rrset.type == type) return {FetchStatus::Ok, std::move(set), {}};
        return {FetchStatus::NotFound, {}, "no " + to_string(type) + " data"};
    }
    return {FetchStatus::Timeout, {}, "no answer from upstream"};
}

ResolveResult ValidatingResolver::fetch_and_validate(const DnsName &name, RRType type, UnixTime at) {
    ResolveResult out;
    auto leaf = fetch(name, type);
    switch (leaf.status) {
    case FetchStatus::Ok: break;
    case FetchStatus::NotFound:
        out.status = ResolveStatus::NotFound;
        out.detail = leaf.detail;
        return out;
    case FetchStatus::Timeout:
        out.status = ResolveStatus::UpstreamTimeout;
        out.detail = leaf.detail;
        return out;
    case FetchStatus::Failed: {
        std::lock_guard lock(mutex_);
        ++stats_.bogus;
        out.status = ResolveStatus::Bogus;
        out.reason = BogusReason::Malformed;
        out.detail = leaf.detail;
        return out;
    }
    }

    // Supporting DNSKEY and DS sets from the signer up to the anchor. Missing links are
    // left for validate_chain to report.
    std::vector<ZoneCut> cuts;
    bool timed_out = false;
    auto support = [&](const DnsName &owner, RRType t) -> std::optional<SignedRRset> {
        if (auto hit = cache_lookup({owner, static_cast<std::uint16_t>(t)}, at)) return std::move(hit->data);
        auto f = fetch(owner, t);
        if (f.status == FetchStatus::Timeout) timed_out = true;
        if (f.status != FetchStatus::Ok) return std::nullopt;
        return std::move(f.data);
    };
    auto zone = signer_of(leaf.data);
    for (int depth = 0; zone && zone->is_subdomain_of(config_.anchor.zone) && depth < kMaxChainDepth; ++depth) {
        auto keys = support(*zone, RRType::DNSKEY);
        if (!keys) break;
        ZoneCut cut{*zone, std::move(*keys), std::nullopt};
        if (*zone == config_.anchor.zone) {
            cuts.push_back(std::move(cut));
            break;
        }
        cut.ds = support(*zone, RRType::DS);
        auto next = cut.ds ? signer_of(*cut.ds) : std::nullopt;
        cuts.push_back(std::move(cut));
        if (!next || *next == *zone || !zone->is_subdomain_of(*next)) break;
        zone = std::move(next);
    }
    if (timed_out) {
        out.status = ResolveStatus::UpstreamTimeout;
        out.detail = "upstream timeout while fetching the chain of trust";
        return out;
    }

    auto verdict = validate_chain(leaf.data, cuts, config_.anchor, at);
    if (!verdict.secure) {
        std::lock_guard lock(mutex_);
        ++stats_.bogus;
        out.status = ResolveStatus::Bogus;
        out.reason = verdict.reason;
        out.detail = verdict.detail;
        return out;
    }
    cache_insert(leaf.data, at);
    for (const auto &cut : cuts) {
        cache_insert(cut.dnskeys, at);
        if (cut.ds) cache_insert(*cut.ds, at);
    }
    out.status = ResolveStatus::Secure;
    out.data = std::move(leaf.data);
    return out;
}

std::optional<ValidatingResolver::CacheEntry> ValidatingResolver::cache_lookup(const Key &key, UnixTime at) {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) return std::nullopt;
    if (at > it->second.inserted_at + std::chrono::seconds(it->second.ttl) || at < it->second.inserted_at) {
        cache_.erase(it);
        return std::nullopt;
    }
    return it->second;
}

void ValidatingResolver::cache_insert(const SignedRRset &set, UnixTime at) {
    // Lifetime is bounded by the RRset TTL, the signed original TTL and signature expiry.
    std::int64_t ttl = set.rrset.ttl;
    for (const auto &raw : set.rrsigs) {
        try {
            auto sig = decode_rrsig_rdata(raw);
            ttl = std::min<std::int64_t>(ttl, sig.original_ttl);
            ttl = std::min<std::int64_t>(ttl, static_cast<std::int64_t>(sig.expiration) - at.time_since_epoch().count());
        } catch (const DnsError &) {
        }
    }
    if (ttl <= 0) return;
    std::lock_guard lock(mutex_);
    cache_[{set.rrset.owner.lowercase(), static_cast<std::uint16_t>(set.rrset.type)}] =
        CacheEntry{set, at, static_cast<std::uint32_t>(ttl)};
}

ValidatingResolver::Stats ValidatingResolver::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

std::size_t ValidatingResolver::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

void ValidatingResolver::clear_cache() {
    std::lock_guard lock(mutex_);
    cache_.clear();
}

Bytes ValidatingResolver::handle_query(ByteView query) {
    if (query.size() < 12) return {};
    DnsMessage q;
    try {
        q = decode_dns_message(query);
    } catch (const std::exception &) {
        return formerr_for(query);
    }
    if (q.qr) return {};
    DnsMessage resp;
    resp.id = q.id;
    resp.qr = true;
    resp.rd = q.rd;
    resp.ra = true;
    resp.questions = q.questions;
    resp.edns = q.edns;
    resp.dnssec_ok = q.dnssec_ok;
    if (q.questions.size() != 1 || q.opcode != 0) {
        resp.rcode = q.opcode != 0 ? Rcode::NotImp : Rcode::FormErr;
        return encode_dns_message(resp);
    }
    auto r = resolve(q.questions.front().name, q.questions.front().type);
    switch (r.status) {
    case ResolveStatus::Secure:
        resp.ad = true;
        if (!q.dnssec_ok) r.data.rrsigs.clear();
        append_records(resp.answers, r.data);
        break;
    case ResolveStatus::NotFound: resp.rcode = Rcode::NxDomain; break;
    case ResolveStatus::Bogus:
    case ResolveStatus::UpstreamTimeout: resp.rcode = Rcode::ServFail; break;
    }
    return encode_dns_message(resp);
}

// --- stub client --------------------------------------------------------------

ResolveResult StubResolverClient::resolve(const DnsName &name, RRType type) {
    ResolveResult out;
    const std::uint16_t id = next_id_++;
    ++queries_;
    UdpUpstream link(resolver_);
    std::optional<Bytes> raw;
    try {
        raw = link.exchange(encode_dns_query(name, type, id), timeout_);
    } catch (const NetError &e) {
        out.status = ResolveStatus::UpstreamTimeout;
        out.detail = e.what();
        return out;
    }
    if (!raw) {
        out.status = ResolveStatus::UpstreamTimeout;
        out.detail = "no answer from " + resolver_.to_string();
        return out;
    }
    DnsResponse resp;
    try {
        resp = decode_dns_response(*raw, id);
    } catch (const std::exception &e) {
        out.status = ResolveStatus::Bogus;
        out.reason = BogusReason::Malformed;
        out.detail = e.what();
        return out;
    }
    if (resp.rcode == Rcode::NxDomain) {
        out.status = ResolveStatus::NotFound;
        return out;
    }
    if (resp.rcode != Rcode::NoError) {
        out.status = ResolveStatus::Bogus;
        out.detail = "resolver answered " + to_string(resp.rcode);
        return out;
    }
    for (auto &set : resp.rrsets) {
        if (set.rrset.owner != name || set.rrset.type != type) continue;
        if (!resp.authenticated) {
            out.status = ResolveStatus::Bogus;
            out.detail = "answer not authenticated";
            return out;
        }
        out.status = ResolveStatus::Secure;
        out.data = std::move(set);
        return out;
    }
    out.status = ResolveStatus::NotFound;
    return out;
}

}  // namespace sdsec
