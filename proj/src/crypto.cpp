#include "sdsec/crypto.hpp"

#include <openssl/bio.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/x509.h>

namespace sdsec {

namespace {

[[noreturn]] void openssl_fail(const std::string &what) {
    unsigned long e = ERR_get_error();
    char buf[256] = {};
    if (e) ERR_error_string_n(e, buf, sizeof buf);
    ERR_clear_error();
    throw CryptoError(what + (e ? std::string(": ") + buf : std::string()));
}

template <class T, void (*F)(T *)>
struct Deleter {
    void operator()(T *p) const { F(p); }
};

using X509Ptr = std::unique_ptr<X509, Deleter<X509, X509_free>>;
using BioPtr = std::unique_ptr<BIO, Deleter<BIO, BIO_free_all>>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, Deleter<EVP_MD_CTX, EVP_MD_CTX_free>>;

std::string bio_to_string(BIO *bio) {
    char *data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    return std::string(data, static_cast<std::size_t>(len));
}

}  // namespace

void Ed25519Key::Free::operator()(EVP_PKEY *p) const { EVP_PKEY_free(p); }

Ed25519Key Ed25519Key::generate() {
    Bytes seed(kEd25519SeedSize);
    secure_random(seed);
    return from_seed(seed);
}

Ed25519Key Ed25519Key::from_seed(ByteView seed) {
    if (seed.size() != kEd25519SeedSize) throw CryptoError("Ed25519 seed must be 32 bytes");
    EVP_PKEY *p = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
    if (!p) openssl_fail("EVP_PKEY_new_raw_private_key");
    return Ed25519Key(p, true);
}

Ed25519Key Ed25519Key::from_public(ByteView public_key) {
    if (public_key.size() != kEd25519PublicKeySize) throw CryptoError("Ed25519 public key must be 32 bytes");
    EVP_PKEY *p = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size());
    if (!p) openssl_fail("EVP_PKEY_new_raw_public_key");
    return Ed25519Key(p, false);
}

Ed25519Key Ed25519Key::from_private_pem(const std::string &pem) {
    BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    EVP_PKEY *p = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
    if (!p) openssl_fail("PEM_read_bio_PrivateKey");
    if (EVP_PKEY_id(p) != EVP_PKEY_ED25519) {
        EVP_PKEY_free(p);
        throw CryptoError("private key is not Ed25519");
    }
    return Ed25519Key(p, true);
}

Bytes Ed25519Key::public_key() const {
    Bytes out(kEd25519PublicKeySize);
    std::size_t len = out.size();
    if (EVP_PKEY_get_raw_public_key(pkey_.get(), out.data(), &len) != 1) openssl_fail("get_raw_public_key");
    out.resize(len);
    return out;
}

Bytes Ed25519Key::seed() const {
    if (!has_private_) throw CryptoError("key has no private half");
    Bytes out(kEd25519SeedSize);
    std::size_t len = out.size();
    if (EVP_PKEY_get_raw_private_key(pkey_.get(), out.data(), &len) != 1) openssl_fail("get_raw_private_key");
    out.resize(len);
    return out;
}

std::string Ed25519Key::private_pem() const {
    if (!has_private_) throw CryptoError("key has no private half");
    BioPtr bio(BIO_new(BIO_s_mem()));
    if (PEM_write_bio_PrivateKey(bio.get(), pkey_.get(), nullptr, nullptr, 0, nullptr, nullptr) != 1)
        openssl_fail("PEM_write_bio_PrivateKey");
    return bio_to_string(bio.get());
}

Bytes Ed25519Key::sign(ByteView message) const {
    if (!has_private_) throw CryptoError("key has no private half");
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey_.get()) != 1) openssl_fail("DigestSignInit");
    Bytes sig(kEd25519SignatureSize);
    std::size_t len = sig.size();
    if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1) openssl_fail("DigestSign");
    sig.resize(len);
    return sig;
}

bool Ed25519Key::verify(ByteView message, ByteView signature) const {
    if (signature.size() != kEd25519SignatureSize) return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey_.get()) != 1) openssl_fail("DigestVerifyInit");
    int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size());
    ERR_clear_error();
    return rc == 1;
}

std::array<std::uint8_t, 32> sha256(ByteView data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) openssl_fail("EVP_Digest");
    return out;
}

void secure_random(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) openssl_fail("RAND_bytes");
}

Bytes make_self_signed_certificate(const Ed25519Key &key, const std::string &common_name, int valid_days) {
    X509Ptr cert(X509_new());
    if (!cert) openssl_fail("X509_new");
    X509_set_version(cert.get(), 2);
    std::uint8_t serial_bytes[8];
    secure_random(serial_bytes);
    std::uint64_t serial = 0;
    for (auto b : serial_bytes) serial = (serial << 8) | b;
    ASN1_INTEGER_set_uint64(X509_get_serialNumber(cert.get()), serial >> 1);
    X509_gmtime_adj(X509_getm_notBefore(cert.get()), 0);
    X509_gmtime_adj(X509_getm_notAfter(cert.get()), 60L * 60 * 24 * valid_days);
    if (X509_set_pubkey(cert.get(), key.native()) != 1) openssl_fail("X509_set_pubkey");
    X509_NAME *name = X509_get_subject_name(cert.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC, reinterpret_cast<const unsigned char *>(common_name.c_str()),
                               -1, -1, 0);
    X509_set_issuer_name(cert.get(), name);
    if (X509_sign(cert.get(), key.native(), nullptr) <= 0) openssl_fail("X509_sign");
    int len = i2d_X509(cert.get(), nullptr);
    if (len <= 0) openssl_fail("i2d_X509");
    Bytes der(static_cast<std::size_t>(len));
    unsigned char *p = der.data();
    i2d_X509(cert.get(), &p);
    return der;
}

CertificateKey certificate_public_key(ByteView der) {
    const unsigned char *p = der.data();
    X509Ptr cert(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!cert || p != der.data() + der.size()) {
        ERR_clear_error();
        throw CryptoError("not a DER certificate");
    }
    EVP_PKEY *pk = X509_get0_pubkey(cert.get());
    if (!pk) openssl_fail("certificate has no public key");
    CertificateKey out{CertificateKeyType::Other, {}};
    if (EVP_PKEY_id(pk) == EVP_PKEY_ED25519) {
        out.type = CertificateKeyType::Ed25519;
        out.public_key.resize(kEd25519PublicKeySize);
        std::size_t len = out.public_key.size();
        if (EVP_PKEY_get_raw_public_key(pk, out.public_key.data(), &len) != 1) openssl_fail("get_raw_public_key");
    }
    return out;
}

Bytes certificate_der_from_pem(const std::string &pem) {
    BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    X509Ptr cert(PEM_read_bio_X509(bio.get(), nullptr, nullptr, nullptr));
    if (!cert) openssl_fail("PEM_read_bio_X509");
    int len = i2d_X509(cert.get(), nullptr);
    Bytes der(static_cast<std::size_t>(len));
    unsigned char *p = der.data();
    i2d_X509(cert.get(), &p);
    return der;
}

std::string certificate_pem_from_der(ByteView der) {
    const unsigned char *p = der.data();
    X509Ptr cert(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!cert) openssl_fail("d2i_X509");
    BioPtr bio(BIO_new(BIO_s_mem()));
    PEM_write_bio_X509(bio.get(), cert.get());
    return bio_to_string(bio.get());
}

}  // namespace sdsec
