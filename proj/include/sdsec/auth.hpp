#pragma once

// Publisher authentication by nonce challenge-response against the certificate
// published in a DANE-EE TLSA record (or a pre-deployed copy of it).

#include "sdsec/crypto.hpp"
#include "sdsec/dns.hpp"
#include "sdsec/sd_wire.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace sdsec {

using Instant = std::chrono::steady_clock::time_point;

inline constexpr std::string_view kNonceKey = "nonce";
inline constexpr std::string_view kSignatureKey = "sig";
inline constexpr std::string_view kChallengeDomain = "someip-dane-v1";
inline constexpr std::size_t kDefaultNonceBytes = 4;

class AuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Source of challenge nonces.
class NonceSource {
public:
    virtual ~NonceSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;
};

/// OpenSSL CSPRNG; failures surface as AuthError ("RngFailure").
class SecureNonceSource final : public NonceSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

/// Reproducible nonces for simulations and tests.
class SeededNonceSource final : public NonceSource {
public:
    explicit SeededNonceSource(std::uint64_t seed) : rng_(seed) {}
    void fill(std::span<std::uint8_t> out) override;

private:
    std::mt19937_64 rng_;
};

struct AuthChallenge {
    Bytes nonce;
    Instant issued_at{};
    friend bool operator==(const AuthChallenge &, const AuthChallenge &) = default;
};

struct AuthResponse {
    Bytes signature;
};

AuthChallenge make_challenge(NonceSource &rng, Instant now, std::size_t nonce_bytes = kDefaultNonceBytes);

/// "nonce" item: lowercase hex.
void embed_challenge(ConfigOption &option, const AuthChallenge &challenge);
/// Returns the nonce carried by `option`, if any. Throws AuthError on a malformed value.
std::optional<Bytes> extract_nonce(const ConfigOption &option);

/// "sig" item: unpadded base64.
void embed_response(ConfigOption &option, const AuthResponse &response);
std::optional<AuthResponse> extract_response(const ConfigOption &option);

/// Domain-separated message: "someip-dane-v1" | service | instance | major | minor | nonce.
Bytes challenge_message(const ServiceDescription &context, ByteView nonce);

/// Throws AuthError ("KeyUnavailable") when `key` has no private half or `context` is
/// not concrete.
AuthResponse sign_challenge(const AuthChallenge &challenge, const Ed25519Key &key, const ServiceDescription &context);

enum class RejectReason { BadSignature, CertificateParseError, SchemeMismatch };

std::string to_string(RejectReason r);

struct AuthResult {
    bool authentic = false;
    RejectReason reason = RejectReason::BadSignature;

    static AuthResult ok() { return {true, RejectReason::BadSignature}; }
    static AuthResult reject(RejectReason r) { return {false, r}; }
};

AuthResult verify_response(const AuthResponse &response, const AuthChallenge &challenge, const TlsaCertRecord &tlsa,
                           const ServiceDescription &context);

/// A publisher's signing key and the certificate that carries its public half.
struct PublisherIdentity {
    Ed25519Key key;
    Bytes certificate;  // DER

    static PublisherIdentity generate(const std::string &common_name);
    [[nodiscard]] TlsaCertRecord tlsa() const { return {3, 0, 0, certificate}; }
};

/// Outstanding challenges of one subscriber, at most one per service instance. A
/// challenge can be consumed once.
class ChallengeTable {
public:
    struct Key {
        std::uint16_t service_id;
        std::uint16_t instance_id;
        friend auto operator<=>(const Key &, const Key &) = default;
    };

    void issue(Key key, AuthChallenge challenge) { table_[key] = std::move(challenge); }
    std::optional<AuthChallenge> consume(Key key);
    [[nodiscard]] bool outstanding(Key key) const { return table_.count(key) != 0; }
    [[nodiscard]] std::size_t size() const { return table_.size(); }

private:
    std::map<Key, AuthChallenge> table_;
};

}  // namespace sdsec
