#pragma once

// Thin RAII layer over OpenSSL: Ed25519 keys, SHA-256, self-signed X.509 and a CSPRNG.

#include "sdsec/bytes.hpp"

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

typedef struct evp_pkey_st EVP_PKEY;

namespace sdsec {

class CryptoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kEd25519PublicKeySize = 32;
inline constexpr std::size_t kEd25519SeedSize = 32;
inline constexpr std::size_t kEd25519SignatureSize = 64;

class Ed25519Key {
public:
    static Ed25519Key generate();
    /// Deterministic key from a 32-byte seed (the raw private key).
    static Ed25519Key from_seed(ByteView seed);
    static Ed25519Key from_public(ByteView public_key);
    static Ed25519Key from_private_pem(const std::string &pem);

    [[nodiscard]] bool has_private() const { return has_private_; }
    [[nodiscard]] Bytes public_key() const;
    [[nodiscard]] Bytes seed() const;  // throws if public-only
    [[nodiscard]] std::string private_pem() const;

    /// Throws CryptoError when the key has no private half.
    [[nodiscard]] Bytes sign(ByteView message) const;
    [[nodiscard]] bool verify(ByteView message, ByteView signature) const;

    [[nodiscard]] EVP_PKEY *native() const { return pkey_.get(); }

private:
    struct Free {
        void operator()(EVP_PKEY *p) const;
    };
    Ed25519Key(EVP_PKEY *p, bool has_private) : pkey_(p, Free{}), has_private_(has_private) {}

    std::shared_ptr<EVP_PKEY> pkey_;
    bool has_private_ = false;
};

std::array<std::uint8_t, 32> sha256(ByteView data);

/// Fills `out` from the OpenSSL CSPRNG; throws CryptoError on failure.
void secure_random(std::span<std::uint8_t> out);

/// Self-signed X.509 v3 certificate for an Ed25519 key, DER encoded.
Bytes make_self_signed_certificate(const Ed25519Key &key, const std::string &common_name, int valid_days = 3650);

enum class CertificateKeyType { Ed25519, Other };

struct CertificateKey {
    CertificateKeyType type;
    Bytes public_key;  // raw Ed25519 key when type == Ed25519
};

/// Extracts the subject public key. Throws CryptoError when `der` is not a certificate.
CertificateKey certificate_public_key(ByteView der);

Bytes certificate_der_from_pem(const std::string &pem);
std::string certificate_pem_from_der(ByteView der);

}  // namespace sdsec
