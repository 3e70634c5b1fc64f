#include "sdsec/auth.hpp"

namespace sdsec {

void SecureNonceSource::fill(std::span<std::uint8_t> out) {
    try {
        secure_random(out);
    } catch (const CryptoError &e) {
        throw AuthError(std::string("RngFailure: ") + e.what());
    }
}

void SeededNonceSource::fill(std::span<std::uint8_t> out) {
    for (auto &b : out) b = static_cast<std::uint8_t>(rng_());
}

AuthChallenge make_challenge(NonceSource &rng, Instant now, std::size_t nonce_bytes) {
    if (nonce_bytes == 0) throw AuthError("nonce length must be positive");
    AuthChallenge c;
    c.nonce.resize(nonce_bytes);
    rng.fill(c.nonce);
    c.issued_at = now;
    return c;
}

void embed_challenge(ConfigOption &option, const AuthChallenge &challenge) {
    option.set(std::string(kNonceKey), to_bytes(to_hex(challenge.nonce)));
}

std::optional<Bytes> extract_nonce(const ConfigOption &option) {
    const Bytes *v = option.find(kNonceKey);
    if (!v) return std::nullopt;
    std::string text(v->begin(), v->end());
    try {
        Bytes nonce = from_hex(text);
        if (!nonce.empty() && to_hex(nonce) == text) return nonce;
    } catch (const std::invalid_argument &) {
    }
    throw AuthError("nonce is not lowercase hex");
}

void embed_response(ConfigOption &option, const AuthResponse &response) {
    option.set(std::string(kSignatureKey), to_bytes(base64_encode_unpadded(response.signature)));
}

std::optional<AuthResponse> extract_response(const ConfigOption &option) {
    const Bytes *v = option.find(kSignatureKey);
    if (!v) return std::nullopt;
    try {
        return AuthResponse{base64_decode_unpadded(std::string(v->begin(), v->end()))};
    } catch (const std::invalid_argument &) {
        throw AuthError("signature is not unpadded base64");
    }
}

Bytes challenge_message(const ServiceDescription &context, ByteView nonce) {
    if (!context.is_concrete()) throw AuthError("challenge context must be a concrete service description");
    ByteWriter w;
    w.raw(kChallengeDomain);
    w.u16(context.service_id);
    w.u16(*context.instance_id);
    w.u8(*context.major_version);
    w.u32(*context.minor_version);
    w.raw(nonce);
    return w.take();
}

AuthResponse sign_challenge(const AuthChallenge &challenge, const Ed25519Key &key, const ServiceDescription &context) {
    if (!key.has_private()) throw AuthError("KeyUnavailable: no private key");
    if (!context.is_concrete()) throw AuthError("KeyUnavailable: context is not concrete");
    return {key.sign(challenge_message(context, challenge.nonce))};
}

std::string to_string(RejectReason r) {
    switch (r) {
    case RejectReason::BadSignature: return "BadSignature";
    case RejectReason::CertificateParseError: return "CertificateParseError";
    case RejectReason::SchemeMismatch: return "SchemeMismatch";
    }
    return "?";
}

AuthResult verify_response(const AuthResponse &response, const AuthChallenge &challenge, const TlsaCertRecord &tlsa,
                           const ServiceDescription &context) {
    CertificateKey cert;
    try {
        cert = certificate_public_key(tlsa.cert_data);
    } catch (const CryptoError &) {
        return AuthResult::reject(RejectReason::CertificateParseError);
    }
    if (cert.type != CertificateKeyType::Ed25519 || response.signature.size() != kEd25519SignatureSize)
        return AuthResult::reject(RejectReason::SchemeMismatch);
    if (!context.is_concrete()) return AuthResult::reject(RejectReason::BadSignature);
    auto key = Ed25519Key::from_public(cert.public_key);
    if (!key.verify(challenge_message(context, challenge.nonce), response.signature))
        return AuthResult::reject(RejectReason::BadSignature);
    return AuthResult::ok();
}

PublisherIdentity PublisherIdentity::generate(const std::string &common_name) {
    auto key = Ed25519Key::generate();
    auto cert = make_self_signed_certificate(key, common_name);
    return {std::move(key), std::move(cert)};
}

std::optional<AuthChallenge> ChallengeTable::consume(Key key) {
    auto it = table_.find(key);
    if (it == table_.end()) return std::nullopt;
    AuthChallenge c = std::move(it->second);
    table_.erase(it);
    return c;
}

}  // namespace sdsec
