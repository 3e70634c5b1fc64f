#include "sdsec/engine.hpp"

#include <algorithm>

namespace sdsec {

namespace {

Duration draw_delay(std::mt19937_64 &rng, Duration lo, Duration hi) {
    if (hi <= lo) return lo;
    return Duration(std::uniform_int_distribution<Duration::rep>(lo.count(), hi.count())(rng));
}

std::uint64_t seed_or_random(std::uint64_t seed) {
    if (seed != 0) return seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

SocketAddress address_of(const EndpointInfo &ep) { return {ep.ip, ep.port}; }

template <class T>
const T *first_option(const SdMessage &msg, const SdEntry &entry) {
    try {
        for (const SdOption *opt : msg.options_of(entry))
            if (const T *v = std::get_if<T>(opt)) return v;
    } catch (const WireError &) {
    }
    return nullptr;
}

/// Service fields as carried by eventgroup entries (no minor version).
ServiceDescription eventgroup_service(const ServiceDescription &d) {
    return {d.service_id, d.instance_id, d.major_version, std::nullopt};
}

}  // namespace

std::string to_string(VariantMode m) {
    switch (m) {
    case VariantMode::SomeIpSd: return "someip-sd";
    case VariantMode::SomeIpSdAuth: return "someip-sd-auth";
    case VariantMode::Dnssec: return "dnssec";
    case VariantMode::DnssecDane: return "dnssec-dane";
    }
    return "?";
}

VariantMode parse_variant(std::string_view text) {
    for (auto m : kAllVariants)
        if (to_string(m) == text) return m;
    throw std::invalid_argument("unknown variant '" + std::string(text) +
                                "' (expected someip-sd, someip-sd-auth, dnssec or dnssec-dane)");
}

std::string to_string(PublisherPhase p) {
    switch (p) {
    case PublisherPhase::Init: return "Init";
    case PublisherPhase::Announcing: return "Announcing";
    case PublisherPhase::Listening: return "Listening";
    case PublisherPhase::Serving: return "Serving";
    }
    return "?";
}

std::string to_string(SubscriberPhase p) {
    switch (p) {
    case SubscriberPhase::Init: return "Init";
    case SubscriberPhase::Discovering: return "Discovering";
    case SubscriberPhase::Subscribing: return "Subscribing";
    case SubscriberPhase::AwaitAck: return "AwaitAck";
    case SubscriberPhase::AwaitTlsa: return "AwaitTlsa";
    case SubscriberPhase::Connected: return "Connected";
    case SubscriberPhase::Failed: return "Failed";
    }
    return "?";
}

std::string to_string(FailureKind f) {
    switch (f) {
    case FailureKind::DiscoveryTimeout: return "DiscoveryTimeout";
    case FailureKind::ResolveFailure: return "ResolveFailure";
    case FailureKind::AuthFailure: return "AuthFailure";
    case FailureKind::SubscriptionRejected: return "SubscriptionRejected";
    case FailureKind::SubscriptionTimeout: return "SubscriptionTimeout";
    }
    return "?";
}

std::optional<Duration> TimingProbe::discovery_latency() const {
    if (!discovery_start || !discovery_end) return std::nullopt;
    return *discovery_end - *discovery_start;
}

std::optional<Duration> TimingProbe::subscription_latency() const {
    if (!subscribe_sent || !connected) return std::nullopt;
    return *connected - *subscribe_sent;
}

// --- publisher ------------------------------------------------------------------

Publisher::Publisher(NodeContext &ctx, PublisherConfig config)
    : ctx_(ctx), config_(std::move(config)), rng_(seed_or_random(config_.seed)), alive_(std::make_shared<bool>(true)) {
    if (!config_.service.description.is_concrete())
        throw std::invalid_argument("publisher needs a concrete service description");
}

Publisher::~Publisher() {
    stop();
    *alive_ = false;
}

void Publisher::start() {
    if (phase_ != PublisherPhase::Init) return;
    started_at_ = ctx_.now();
    if (uses_dns(config_.mode)) {
        // Discovery happens in DNS; nothing is announced.
        phase_ = PublisherPhase::Listening;
        return;
    }
    phase_ = PublisherPhase::Announcing;
    const Duration delay = draw_delay(rng_, config_.timing.initial_delay_min, config_.timing.initial_delay_max);
    timer_ = ctx_.start_timer(delay, [this, alive = alive_] {
        if (!*alive) return;
        timer_.reset();
        cyclic_offer();
    });
}

void Publisher::stop() {
    if (timer_) ctx_.cancel_timer(*timer_);
    timer_.reset();
}

SdMessage Publisher::new_message() {
    auto s = sessions_.next();
    SdMessage m;
    m.session_id = s.session_id;
    m.reboot_flag = s.reboot_flag;
    return m;
}

SdEntry Publisher::offer_entry() const {
    SdEntry e;
    e.type = EntryType::Offer;
    e.service = config_.service.description;
    e.ttl_seconds = config_.timing.offer_ttl_s;
    return e;
}

void Publisher::send_offer(const std::optional<SocketAddress> &unicast_to) {
    SdMessage m = new_message();
    SdEntry e = offer_entry();
    e.first_run = {m.add_option(config_.service.endpoint), 1};
    m.entries.push_back(e);
    const Bytes wire = encode_sd_message(m);
    if (!first_offer_at_) first_offer_at_ = ctx_.now();
    if (unicast_to) {
        ctx_.send(*unicast_to, wire);
        ++stats_.offers_unicast;
    } else {
        ctx_.send_multicast(wire);
        ++stats_.offers_multicast;
    }
}

void Publisher::cyclic_offer() {
    send_offer(std::nullopt);
    timer_ = ctx_.start_timer(config_.timing.cyclic_offer_period, [this, alive = alive_] {
        if (!*alive) return;
        timer_.reset();
        cyclic_offer();
    });
}

void Publisher::on_datagram(const SocketAddress &from, ByteView data, bool) {
    if (phase_ == PublisherPhase::Init || !is_sd_message(data)) return;
    SdMessage msg;
    try {
        msg = decode_sd_message(data);
    } catch (const WireError &) {
        return;
    }
    for (const auto &entry : msg.entries) {
        if (entry.type == EntryType::Find)
            handle_find(from, entry);
        else if (entry.type == EntryType::Subscribe)
            handle_subscribe(from, msg, entry);
    }
}

void Publisher::handle_find(const SocketAddress &from, const SdEntry &entry) {
    if (uses_dns(config_.mode) || !entry.service.matches(config_.service.description)) return;
    if (!config_.timing.request_response_delay) {
        send_offer(from);
        return;
    }
    const Duration delay =
        draw_delay(rng_, config_.timing.response_delay_min, config_.timing.response_delay_max);
    ctx_.start_timer(delay, [this, alive = alive_, from] {
        if (*alive) send_offer(from);
    });
}

void Publisher::handle_subscribe(const SocketAddress &from, const SdMessage &msg, const SdEntry &entry) {
    const auto &self = config_.service.description;
    if (!eventgroup_service(entry.service).matches(eventgroup_service(self)) ||
        entry.service.instance_id != self.instance_id)
        return;

    const EndpointInfo *ep = first_option<EndpointInfo>(msg, entry);
    const SocketAddress subscriber = ep ? address_of(*ep) : from;
    auto &group_members = subscribers_[entry.eventgroup_id];

    if (entry.ttl_seconds == 0) {  // StopSubscribe
        group_members.erase(subscriber);
        return;
    }

    SdMessage reply = new_message();
    SdEntry ack;
    ack.type = EntryType::SubscribeAck;
    ack.service = eventgroup_service(self);
    ack.eventgroup_id = entry.eventgroup_id;
    ack.ttl_seconds = config_.timing.subscription_ttl_s;

    const auto &groups = config_.service.eventgroups;
    bool accept = std::find(groups.begin(), groups.end(), entry.eventgroup_id) != groups.end();

    if (accept && uses_auth(config_.mode)) {
        std::optional<Bytes> nonce;
        if (const ConfigOption *cfg = first_option<ConfigOption>(msg, entry)) {
            try {
                nonce = extract_nonce(*cfg);
            } catch (const AuthError &) {
            }
        }
        accept = nonce && config_.signing_key;
        if (accept) {
            const auto t0 = std::chrono::steady_clock::now();
            AuthResponse resp;
            try {
                resp = sign_challenge(AuthChallenge{*nonce, ctx_.now()}, *config_.signing_key, self);
            } catch (const AuthError &) {
                accept = false;
            }
            stats_.sign_times.push_back(std::chrono::steady_clock::now() - t0);
            if (accept) {
                ConfigOption cfg;
                embed_response(cfg, resp);
                ack.first_run = {reply.add_option(cfg), 1};
            }
        }
    }

    if (!accept) {
        ack.ttl_seconds = 0;
        ack.first_run = {};
        ++stats_.nacks;
    } else {
        group_members[subscriber] = ctx_.now() + std::chrono::seconds(config_.timing.subscription_ttl_s);
        ++stats_.acks;
        phase_ = PublisherPhase::Serving;
    }
    reply.entries.push_back(ack);
    ctx_.send(from, encode_sd_message(reply));
}

std::size_t Publisher::publish(std::uint16_t eventgroup, ByteView payload) {
    auto it = subscribers_.find(eventgroup);
    if (it == subscribers_.end()) return 0;
    const Instant now = ctx_.now();
    std::erase_if(it->second, [&](const auto &kv) { return kv.second < now; });
    std::size_t sent = 0;
    for (const auto &[endpoint, expiry] : it->second) {
        event_session_ = event_session_ == 0xFFFF ? 1 : static_cast<std::uint16_t>(event_session_ + 1);
        Notification n{config_.service.description.service_id, kDefaultEventId, event_session_,
                       Bytes(payload.begin(), payload.end())};
        ctx_.send(endpoint, encode_notification(n));
        ++sent;
    }
    stats_.notifications += sent;
    return sent;
}

std::size_t Publisher::subscriber_count(std::uint16_t eventgroup) const {
    auto it = subscribers_.find(eventgroup);
    if (it == subscribers_.end()) return 0;
    const Instant now = ctx_.now();
    return static_cast<std::size_t>(
        std::count_if(it->second.begin(), it->second.end(), [&](const auto &kv) { return kv.second >= now; }));
}

// --- subscriber -----------------------------------------------------------------

Subscriber::Subscriber(NodeContext &ctx, SubscriberConfig config)
    : ctx_(ctx), config_(std::move(config)), rng_(seed_or_random(config_.seed)), alive_(std::make_shared<bool>(true)) {
    if (!config_.nonces) config_.nonces = std::make_shared<SecureNonceSource>();
}

Subscriber::~Subscriber() {
    cancel_timer();
    *alive_ = false;
}

void Subscriber::arm(Duration after, void (Subscriber::*fn)()) {
    cancel_timer();
    timer_ = ctx_.start_timer(after, [this, alive = alive_, fn] {
        if (!*alive) return;
        timer_.reset();
        (this->*fn)();
    });
}

void Subscriber::cancel_timer() {
    if (timer_) ctx_.cancel_timer(*timer_);
    timer_.reset();
}

void Subscriber::start() {
    if (report_.phase != SubscriberPhase::Init) return;
    report_.timing.discovery_start = ctx_.now();
    report_.phase = SubscriberPhase::Discovering;
    if (uses_dns(config_.mode))
        begin_dns_discovery();
    else
        begin_sd_discovery();
}

void Subscriber::stop() {
    cancel_timer();
    if (report_.phase != SubscriberPhase::Connected || !target_) return;
    SdMessage m;
    auto s = sessions_.next();
    m.session_id = s.session_id;
    m.reboot_flag = s.reboot_flag;
    SdEntry e;
    e.type = EntryType::Subscribe;
    e.service = eventgroup_service(target_->description);
    e.eventgroup_id = config_.eventgroup;
    e.ttl_seconds = 0;
    const SocketAddress local = ctx_.local_address();
    e.first_run = {m.add_option(EndpointInfo{local.ip, L4Protocol::Udp, local.port}), 1};
    m.entries.push_back(e);
    ctx_.send(address_of(target_->endpoint), encode_sd_message(m));
}

void Subscriber::fail(FailureKind kind, std::string detail) {
    if (finished()) return;
    cancel_timer();
    report_.phase = SubscriberPhase::Failed;
    report_.failure = kind;
    report_.detail = std::move(detail);
}

// SD discovery: an initial random wait, then find with retries. Offers seen during the wait
// are kept and used when it ends.

void Subscriber::begin_sd_discovery() {
    report_.initial_delay = draw_delay(rng_, config_.timing.initial_delay_min, config_.timing.initial_delay_max);
    arm(report_.initial_delay, &Subscriber::on_initial_wait_over);
}

void Subscriber::on_initial_wait_over() {
    initial_wait_over_ = true;
    if (buffered_offer_) {
        discovered(*buffered_offer_);
        return;
    }
    send_find();
}

void Subscriber::send_find() {
    SdMessage m;
    auto s = sessions_.next();
    m.session_id = s.session_id;
    m.reboot_flag = s.reboot_flag;
    SdEntry e;
    e.type = EntryType::Find;
    e.service = config_.desired;
    e.ttl_seconds = config_.timing.offer_ttl_s;
    m.entries.push_back(e);
    ctx_.send_multicast(encode_sd_message(m));
    ++finds_sent_;
    arm(config_.timing.find_interval, &Subscriber::on_find_timer);
}

void Subscriber::on_find_timer() {
    if (report_.phase != SubscriberPhase::Discovering) return;
    if (finds_sent_ < config_.timing.find_attempts) {
        send_find();
        return;
    }
    fail(FailureKind::DiscoveryTimeout, "no offer after " + std::to_string(finds_sent_) + " find messages");
}

void Subscriber::handle_offer(const SdMessage &msg, const SdEntry &entry) {
    if (report_.phase != SubscriberPhase::Discovering || uses_dns(config_.mode)) return;
    if (entry.ttl_seconds == 0 || !entry.service.is_concrete() || !config_.desired.matches(entry.service)) return;
    const EndpointInfo *ep = first_option<EndpointInfo>(msg, entry);
    if (!ep) return;
    Target t{entry.service, *ep};
    if (!initial_wait_over_) {
        if (!buffered_offer_) buffered_offer_ = t;
        return;
    }
    cancel_timer();
    discovered(t);
}

// DNS discovery: one SVCB lookup for the query name of the desired description.

void Subscriber::begin_dns_discovery() {
    DnsName name;
    try {
        name = to_query_name(config_.desired, config_.parent).to_dns_name();
    } catch (const std::exception &e) {
        fail(FailureKind::ResolveFailure, e.what());
        return;
    }
    ctx_.resolve(name, RRType::SVCB, [this, alive = alive_](const ResolveResult &r) {
        if (*alive) on_svcb(r);
    });
}

void Subscriber::on_svcb(const ResolveResult &r) {
    if (report_.phase != SubscriberPhase::Discovering) return;
    if (!r.secure()) {
        report_.resolve_status = r.status;
        fail(FailureKind::ResolveFailure, "SVCB " + to_string(r.status) + (r.detail.empty() ? "" : ": " + r.detail));
        return;
    }
    std::optional<SvcbServiceRecord> best;
    for (const auto &rdata : r.data.rrset.rdatas) {
        SvcbServiceRecord rec;
        try {
            rec = decode_service_svcb(rdata);
        } catch (const DnsError &) {
            continue;
        }
        if (!config_.desired.matches(rec.description(config_.desired.service_id))) continue;
        if (!best || std::tie(rec.priority, rec.instance) < std::tie(best->priority, best->instance)) best = rec;
    }
    if (!best) {
        report_.resolve_status = ResolveStatus::NotFound;
        fail(FailureKind::ResolveFailure, "no matching SVCB record");
        return;
    }
    discovered({best->description(config_.desired.service_id), best->endpoint()});
}

void Subscriber::discovered(Target target) {
    report_.timing.discovery_end = ctx_.now();
    report_.endpoint = target.endpoint;
    report_.publisher = target.description;
    target_ = std::move(target);
    subscribe();
}

// Subscription: Subscribe (with a nonce in auth modes); DANE mode looks up TLSA at the same time.

void Subscriber::subscribe() {
    report_.phase = SubscriberPhase::Subscribing;
    const ServiceDescription &pub = target_->description;

    if (config_.mode == VariantMode::SomeIpSdAuth) {
        if (!config_.pinned_certificate) {
            fail(FailureKind::AuthFailure, "no pre-deployed certificate");
            return;
        }
        tlsa_ = std::vector<TlsaCertRecord>{{3, 0, 0, *config_.pinned_certificate}};
    }

    SdMessage m;
    auto s = sessions_.next();
    m.session_id = s.session_id;
    m.reboot_flag = s.reboot_flag;
    SdEntry e;
    e.type = EntryType::Subscribe;
    e.service = eventgroup_service(pub);
    e.eventgroup_id = config_.eventgroup;
    e.ttl_seconds = config_.timing.subscription_ttl_s;
    const SocketAddress local = ctx_.local_address();
    e.first_run = {m.add_option(EndpointInfo{local.ip, L4Protocol::Udp, local.port}), 1};
    if (uses_auth(config_.mode)) {
        AuthChallenge challenge;
        try {
            challenge = make_challenge(*config_.nonces, ctx_.now(), config_.nonce_bytes);
        } catch (const AuthError &ex) {
            fail(FailureKind::AuthFailure, ex.what());
            return;
        }
        ConfigOption cfg;
        embed_challenge(cfg, challenge);
        e.second_run = {m.add_option(cfg), 1};
        challenges_.issue({pub.service_id, *pub.instance_id}, std::move(challenge));
    }
    m.entries.push_back(e);
    ctx_.send(address_of(target_->endpoint), encode_sd_message(m));
    report_.timing.subscribe_sent = ctx_.now();
    report_.phase = SubscriberPhase::AwaitAck;
    arm(config_.timing.subscribe_timeout, &Subscriber::on_subscribe_timeout);

    if (config_.mode == VariantMode::DnssecDane) {
        const DnsName owner =
            tlsa_owner_name(service_name(pub, config_.parent), target_->endpoint.port, target_->endpoint.protocol);
        ctx_.resolve(owner, RRType::TLSA, [this, alive = alive_](const ResolveResult &r) {
            if (*alive) on_tlsa(r);
        });
    }
}

void Subscriber::on_subscribe_timeout() {
    if (report_.phase == SubscriberPhase::AwaitAck)
        fail(FailureKind::SubscriptionTimeout, "no SubscribeAck");
    else if (report_.phase == SubscriberPhase::AwaitTlsa)
        fail(FailureKind::AuthFailure, "TLSA record not available in time");
}

void Subscriber::on_tlsa(const ResolveResult &r) {
    if (finished()) return;
    if (!r.secure()) {
        report_.resolve_status = r.status;
        fail(FailureKind::ResolveFailure, "TLSA " + to_string(r.status) + (r.detail.empty() ? "" : ": " + r.detail));
        return;
    }
    std::vector<TlsaCertRecord> records;
    for (const auto &rdata : r.data.rrset.rdatas) {
        try {
            records.push_back(decode_tlsa_rdata(rdata));
        } catch (const DnsError &) {
        }
    }
    if (records.empty()) {
        report_.resolve_status = ResolveStatus::NotFound;
        fail(FailureKind::ResolveFailure, "no usable TLSA record");
        return;
    }
    tlsa_ = std::move(records);
    if (report_.phase == SubscriberPhase::AwaitTlsa) try_verify();
}

void Subscriber::handle_ack(const SdMessage &msg, const SdEntry &entry) {
    if (report_.phase != SubscriberPhase::AwaitAck || !target_) return;
    const ServiceDescription &pub = target_->description;
    if (entry.service.service_id != pub.service_id || entry.service.instance_id != pub.instance_id ||
        entry.eventgroup_id != config_.eventgroup)
        return;
    cancel_timer();
    if (entry.ttl_seconds == 0) {
        fail(FailureKind::SubscriptionRejected, "negative SubscribeAck");
        return;
    }
    if (!uses_auth(config_.mode)) {
        connect();
        return;
    }
    const ConfigOption *cfg = first_option<ConfigOption>(msg, entry);
    std::optional<AuthResponse> resp;
    try {
        if (cfg) resp = extract_response(*cfg);
    } catch (const AuthError &ex) {
        fail(FailureKind::AuthFailure, ex.what());
        return;
    }
    if (!resp) {
        fail(FailureKind::AuthFailure, "SubscribeAck carries no signature");
        return;
    }
    pending_response_ = std::move(resp);
    if (tlsa_) {
        try_verify();
        return;
    }
    // The TLSA answer is still outstanding; hold the Ack for a bounded time.
    report_.phase = SubscriberPhase::AwaitTlsa;
    arm(config_.timing.tlsa_verify_timeout, &Subscriber::on_subscribe_timeout);
}

void Subscriber::try_verify() {
    cancel_timer();
    const ServiceDescription &pub = target_->description;
    auto challenge = challenges_.consume({pub.service_id, *pub.instance_id});
    if (!challenge) {
        fail(FailureKind::AuthFailure, "no outstanding challenge");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    AuthResult result = AuthResult::reject(RejectReason::BadSignature);
    for (const auto &rec : *tlsa_) {
        result = verify_response(*pending_response_, *challenge, rec, pub);
        if (result.authentic) break;
    }
    report_.verify_time = std::chrono::steady_clock::now() - t0;
    if (!result.authentic) {
        report_.reject_reason = result.reason;
        fail(FailureKind::AuthFailure, "signature rejected: " + to_string(result.reason));
        return;
    }
    connect();
}

void Subscriber::connect() {
    report_.phase = SubscriberPhase::Connected;
    report_.timing.connected = ctx_.now();
}

void Subscriber::on_datagram(const SocketAddress &, ByteView data, bool) {
    if (!is_sd_message(data)) {
        if (report_.phase != SubscriberPhase::Connected) return;
        try {
            auto n = decode_notification(data);
            if (n.service_id == target_->description.service_id) received_.push_back(std::move(n.payload));
        } catch (const WireError &) {
        }
        return;
    }
    SdMessage msg;
    try {
        msg = decode_sd_message(data);
    } catch (const WireError &) {
        return;
    }
    for (const auto &entry : msg.entries) {
        if (entry.type == EntryType::Offer)
            handle_offer(msg, entry);
        else if (entry.type == EntryType::SubscribeAck)
            handle_ack(msg, entry);
    }
}

}  // namespace sdsec
