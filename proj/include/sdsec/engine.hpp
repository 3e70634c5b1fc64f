#pragma once

// Publisher and subscriber state machines for the four discovery/subscription variants.

#include "sdsec/auth.hpp"
#include "sdsec/runtime.hpp"
#include "sdsec/zone.hpp"

#include <array>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace sdsec {

enum class VariantMode { SomeIpSd, SomeIpSdAuth, Dnssec, DnssecDane };

inline constexpr std::array<VariantMode, 4> kAllVariants{VariantMode::SomeIpSd, VariantMode::SomeIpSdAuth,
                                                         VariantMode::Dnssec, VariantMode::DnssecDane};

/// "someip-sd", "someip-sd-auth", "dnssec", "dnssec-dane"
std::string to_string(VariantMode m);
VariantMode parse_variant(std::string_view text);

inline bool uses_dns(VariantMode m) { return m == VariantMode::Dnssec || m == VariantMode::DnssecDane; }
inline bool uses_auth(VariantMode m) { return m == VariantMode::SomeIpSdAuth || m == VariantMode::DnssecDane; }

struct SdTiming {
    Duration initial_delay_min = std::chrono::milliseconds(10);
    Duration initial_delay_max = std::chrono::milliseconds(100);
    Duration cyclic_offer_period = std::chrono::seconds(1);
    std::uint32_t offer_ttl_s = 3;
    int find_attempts = 2;
    Duration find_interval = std::chrono::milliseconds(500);
    bool request_response_delay = false;
    Duration response_delay_min = std::chrono::milliseconds(10);
    Duration response_delay_max = std::chrono::milliseconds(50);
    std::uint32_t subscription_ttl_s = 3;
    Duration subscribe_timeout = std::chrono::seconds(2);
    Duration tlsa_verify_timeout = std::chrono::seconds(2);
};

/// Event id carried by notifications.
inline constexpr std::uint16_t kDefaultEventId = 0x8001;

// --- publisher ------------------------------------------------------------------

struct PublisherConfig {
    VariantMode mode = VariantMode::SomeIpSd;
    ServiceCatalogEntry service;
    std::optional<Ed25519Key> signing_key;  // auth modes
    SdTiming timing;
    std::uint64_t seed = 0;  // 0: nondeterministic
};

enum class PublisherPhase { Init, Announcing, Listening, Serving };

std::string to_string(PublisherPhase p);

struct PublisherStats {
    std::uint64_t offers_multicast = 0;
    std::uint64_t offers_unicast = 0;
    std::uint64_t acks = 0;
    std::uint64_t nacks = 0;
    std::uint64_t notifications = 0;
    std::vector<Duration> sign_times;
};

class Publisher final : public DatagramHandler {
public:
    Publisher(NodeContext &ctx, PublisherConfig config);
    ~Publisher() override;

    void start();
    void stop();

    /// Sends `payload` to every live subscriber of `eventgroup`; returns the number of sends.
    std::size_t publish(std::uint16_t eventgroup, ByteView payload);
    [[nodiscard]] std::size_t subscriber_count(std::uint16_t eventgroup) const;

    [[nodiscard]] PublisherPhase phase() const { return phase_; }
    [[nodiscard]] const PublisherStats &stats() const { return stats_; }
    [[nodiscard]] std::optional<Instant> first_offer_at() const { return first_offer_at_; }
    [[nodiscard]] std::optional<Instant> started_at() const { return started_at_; }
    [[nodiscard]] const ServiceDescription &description() const { return config_.service.description; }

    void on_datagram(const SocketAddress &from, ByteView data, bool multicast) override;

private:
    SdMessage new_message();
    SdEntry offer_entry() const;
    void send_offer(const std::optional<SocketAddress> &unicast_to);
    void cyclic_offer();
    void handle_find(const SocketAddress &from, const SdEntry &entry);
    void handle_subscribe(const SocketAddress &from, const SdMessage &msg, const SdEntry &entry);

    NodeContext &ctx_;
    PublisherConfig config_;
    PublisherPhase phase_ = PublisherPhase::Init;
    PublisherStats stats_;
    SessionCounter sessions_;
    std::uint16_t event_session_ = 0;
    std::mt19937_64 rng_;
    std::optional<NodeContext::TimerId> timer_;
    std::optional<Instant> started_at_;
    std::optional<Instant> first_offer_at_;

    std::map<std::uint16_t, std::map<SocketAddress, Instant>> subscribers_;  // eventgroup -> endpoint -> expiry
    std::shared_ptr<bool> alive_;
};

// --- subscriber -----------------------------------------------------------------

enum class SubscriberPhase { Init, Discovering, Subscribing, AwaitAck, AwaitTlsa, Connected, Failed };

std::string to_string(SubscriberPhase p);

enum class FailureKind { DiscoveryTimeout, ResolveFailure, AuthFailure, SubscriptionRejected, SubscriptionTimeout };

std::string to_string(FailureKind f);

struct TimingProbe {
    std::optional<Instant> discovery_start;
    std::optional<Instant> discovery_end;
    std::optional<Instant> subscribe_sent;
    std::optional<Instant> connected;

    [[nodiscard]] std::optional<Duration> discovery_latency() const;
    [[nodiscard]] std::optional<Duration> subscription_latency() const;
};

struct ConnectionReport {
    SubscriberPhase phase = SubscriberPhase::Init;
    std::optional<FailureKind> failure;
    std::string detail;
    TimingProbe timing;
    Duration initial_delay = Duration::zero();  // SD modes
    std::optional<EndpointInfo> endpoint;
    std::optional<ServiceDescription> publisher;
    std::optional<ResolveStatus> resolve_status;  // of the failing lookup
    std::optional<Duration> verify_time;
    std::optional<RejectReason> reject_reason;

    [[nodiscard]] bool connected() const { return phase == SubscriberPhase::Connected; }
};

struct SubscriberConfig {
    VariantMode mode = VariantMode::SomeIpSd;
    ServiceDescription desired;
    std::uint16_t eventgroup = 1;
    DnsName parent = default_parent_domain();
    std::optional<Bytes> pinned_certificate;  // trust material for someip-sd-auth
    std::shared_ptr<NonceSource> nonces;      // defaults to the system CSPRNG
    std::size_t nonce_bytes = kDefaultNonceBytes;
    SdTiming timing;
    std::uint64_t seed = 0;  // 0: nondeterministic
};

class Subscriber final : public DatagramHandler {
public:
    Subscriber(NodeContext &ctx, SubscriberConfig config);
    ~Subscriber() override;

    /// Marks the end of client initialisation and begins discovery.
    void start();
    /// Cancels timers and, when connected, withdraws the subscription.
    void stop();

    [[nodiscard]] SubscriberPhase phase() const { return report_.phase; }
    [[nodiscard]] bool finished() const {
        return report_.phase == SubscriberPhase::Connected || report_.phase == SubscriberPhase::Failed;
    }
    [[nodiscard]] const ConnectionReport &report() const { return report_; }
    [[nodiscard]] const std::vector<Bytes> &received() const { return received_; }

    void on_datagram(const SocketAddress &from, ByteView data, bool multicast) override;

private:
    struct Target {
        ServiceDescription description;  // concrete
        EndpointInfo endpoint;
    };

    void begin_sd_discovery();
    void send_find();
    void on_initial_wait_over();
    void on_find_timer();
    void handle_offer(const SdMessage &msg, const SdEntry &entry);
    void begin_dns_discovery();
    void on_svcb(const ResolveResult &r);
    void discovered(Target target);
    void subscribe();
    void on_tlsa(const ResolveResult &r);
    void on_subscribe_timeout();
    void handle_ack(const SdMessage &msg, const SdEntry &entry);
    void try_verify();
    void connect();
    void fail(FailureKind kind, std::string detail);
    void arm(Duration after, void (Subscriber::*fn)());
    void cancel_timer();

    NodeContext &ctx_;
    SubscriberConfig config_;
    ConnectionReport report_;
    SessionCounter sessions_;
    std::mt19937_64 rng_;
    std::optional<NodeContext::TimerId> timer_;
    bool initial_wait_over_ = false;
    int finds_sent_ = 0;
    std::optional<Target> buffered_offer_;
    std::optional<Target> target_;
    ChallengeTable challenges_;
    std::optional<std::vector<TlsaCertRecord>> tlsa_;
    std::optional<AuthResponse> pending_response_;
    std::vector<Bytes> received_;
    std::shared_ptr<bool> alive_;
};

}  // namespace sdsec
