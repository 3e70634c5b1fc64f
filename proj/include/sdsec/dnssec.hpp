#pragma once

// RRset signing and chain-of-trust validation (Ed25519 only).

#include "sdsec/crypto.hpp"
#include "sdsec/dns.hpp"

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdsec {

using UnixTime = std::chrono::sys_seconds;

class DnssecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class KeyRole { Zsk, Ksk };

struct ZoneSigningKey {
    Ed25519Key key;
    DnskeyRdata dnskey;
    std::uint16_t key_tag = 0;

    static ZoneSigningKey generate(KeyRole role);
    static ZoneSigningKey from_key(Ed25519Key key, KeyRole role);

    [[nodiscard]] KeyRole role() const { return dnskey.is_sep() ? KeyRole::Ksk : KeyRole::Zsk; }
};

struct ZoneKeys {
    ZoneSigningKey ksk;
    ZoneSigningKey zsk;

    static ZoneKeys generate();
    /// Derives both keys from a seed string; for reproducible zones in tests and demos.
    static ZoneKeys derive(const std::string &seed);
};

struct ValidityWindow {
    UnixTime inception;
    UnixTime expiration;
};

/// Bytes covered by an RRSIG: the RRSIG RDATA prefix followed by the RRset in canonical form.
Bytes rrset_signing_input(const ResourceRecordSet &rrset, const RrsigRdata &rrsig);

/// Throws DnssecError ("KeyUnusable") when the key cannot sign or the window is empty.
RrsigRdata sign_rrset(const ResourceRecordSet &rrset, const ZoneSigningKey &key, const DnsName &signer,
                      ValidityWindow validity);

DsRdata compute_ds(const DnsName &owner, const DnskeyRdata &dnskey);

struct TrustAnchor {
    DnsName zone;
    DsRdata ds;

    static TrustAnchor parse(std::string_view text) {
        auto [zone, ds] = ds_from_text(text);
        return {zone, ds};
    }
    [[nodiscard]] std::string to_string() const { return ds_to_text(zone, ds); }
};

/// Supporting records for one zone on the path from the anchor to the signer of a leaf
/// RRset. `ds` is the DS RRset published in the parent zone; it is absent for the anchor.
struct ZoneCut {
    DnsName zone;
    SignedRRset dnskeys;
    std::optional<SignedRRset> ds;
};

enum class BogusReason {
    SignatureInvalid,
    Expired,
    NotYetValid,
    KeyTagMismatch,
    BrokenDelegation,
    Malformed,
};

std::string to_string(BogusReason r);

struct ValidationResult {
    bool secure = false;
    BogusReason reason = BogusReason::SignatureInvalid;
    std::string detail;

    static ValidationResult ok() { return {true, BogusReason::SignatureInvalid, {}}; }
    static ValidationResult bogus(BogusReason r, std::string detail) { return {false, r, std::move(detail)}; }
};

/// Checks one RRSIG over `rrset` against one DNSKEY at time `now`.
ValidationResult verify_rrsig(const ResourceRecordSet &rrset, const RrsigRdata &rrsig, const DnskeyRdata &dnskey,
                              UnixTime now);

/// Secure iff every link verifies: anchor DS -> KSK -> DNSKEY RRset -> (DS -> child KSK ...)
/// -> leaf RRSIG, all inside their validity windows.
ValidationResult validate_chain(const SignedRRset &leaf, std::span<const ZoneCut> supporting,
                                const TrustAnchor &anchor, UnixTime now);

}  // namespace sdsec
