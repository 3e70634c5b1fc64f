#include "sdsec/dnssec.hpp"

#include <algorithm>

namespace sdsec {

namespace {

std::uint32_t to_wire_time(UnixTime t) { return static_cast<std::uint32_t>(t.time_since_epoch().count()); }

// A key usable for validation: zone key, DNSSEC protocol, supported algorithm.
bool usable(const DnskeyRdata &k) {
    return (k.flags & kDnskeyFlagZone) && k.protocol == 3 && k.algorithm == kAlgorithmEd25519 &&
           k.public_key.size() == kEd25519PublicKeySize;
}

struct TrustedKey {
    DnskeyRdata rdata;
    std::uint16_t tag;
};

// Validates an RRset against a set of trusted keys. Tries every RRSIG whose signer is
// `zone`; the first success wins, otherwise the most specific failure is reported.
ValidationResult verify_with_keys(const SignedRRset &set, const DnsName &zone, const std::vector<TrustedKey> &keys,
                                  UnixTime now) {
    if (set.rrsigs.empty())
        return ValidationResult::bogus(BogusReason::SignatureInvalid,
                                       "no RRSIG over " + set.rrset.owner.to_string() + " " + to_string(set.rrset.type));
    std::optional<ValidationResult> failure;
    auto note = [&](ValidationResult r) {
        if (!failure || failure->reason == BogusReason::KeyTagMismatch) failure = std::move(r);
    };
    for (const auto &raw : set.rrsigs) {
        RrsigRdata sig;
        try {
            sig = decode_rrsig_rdata(raw);
        } catch (const DnsError &e) {
            note(ValidationResult::bogus(BogusReason::Malformed, e.what()));
            continue;
        }
        if (sig.signer != zone) {
            note(ValidationResult::bogus(BogusReason::BrokenDelegation,
                                         "RRSIG signer " + sig.signer.to_string() + " is not " + zone.to_string()));
            continue;
        }
        bool tag_found = false;
        for (const auto &k : keys) {
            if (k.tag != sig.key_tag) continue;
            tag_found = true;
            auto r = verify_rrsig(set.rrset, sig, k.rdata, now);
            if (r.secure) return r;
            note(std::move(r));
        }
        if (!tag_found)
            note(ValidationResult::bogus(BogusReason::KeyTagMismatch,
                                         "no trusted key with tag " + std::to_string(sig.key_tag)));
    }
    return *failure;
}

// Parses and filters the DNSKEY RRset of a zone.
std::optional<std::vector<TrustedKey>> parse_keys(const ZoneCut &cut, ValidationResult &error) {
    if (cut.dnskeys.rrset.type != RRType::DNSKEY || cut.dnskeys.rrset.owner != cut.zone) {
        error = ValidationResult::bogus(BogusReason::BrokenDelegation, "DNSKEY RRset does not belong to " +
                                                                           cut.zone.to_string());
        return std::nullopt;
    }
    std::vector<TrustedKey> keys;
    for (const auto &raw : cut.dnskeys.rrset.rdatas) {
        try {
            auto k = decode_dnskey_rdata(raw);
            if (usable(k)) keys.push_back({k, compute_key_tag(raw)});
        } catch (const DnsError &) {
            // Unparseable keys are ignored; signatures by them then fail to match.
        }
    }
    return keys;
}

// Selects the DNSKEYs of `cut` matched by any DS in `ds_set`, then validates the DNSKEY
// RRset with them. On success returns all usable keys of the zone.
std::optional<std::vector<TrustedKey>> enter_zone(const ZoneCut &cut, const std::vector<DsRdata> &ds_set,
                                                  UnixTime now, ValidationResult &error) {
    auto keys = parse_keys(cut, error);
    if (!keys) return std::nullopt;
    std::vector<TrustedKey> entry;
    bool tag_seen = false;
    for (const auto &ds : ds_set) {
        for (const auto &k : *keys) {
            if (k.tag != ds.key_tag || k.rdata.algorithm != ds.algorithm) continue;
            tag_seen = true;
            if (ds.digest_type != kDigestSha256) continue;
            if (compute_ds(cut.zone, k.rdata).digest == ds.digest) entry.push_back(k);
        }
    }
    if (entry.empty()) {
        error = tag_seen ? ValidationResult::bogus(BogusReason::BrokenDelegation,
                                                   "DS digest matches no DNSKEY of " + cut.zone.to_string())
                         : ValidationResult::bogus(BogusReason::KeyTagMismatch,
                                                   "DS key tag matches no DNSKEY of " + cut.zone.to_string());
        return std::nullopt;
    }
    auto r = verify_with_keys(cut.dnskeys, cut.zone, entry, now);
    if (!r.secure) {
        error = std::move(r);
        return std::nullopt;
    }
    return keys;
}

}  // namespace

ZoneSigningKey ZoneSigningKey::from_key(Ed25519Key key, KeyRole role) {
    ZoneSigningKey z{std::move(key), {}, 0};
    z.dnskey.flags = kDnskeyFlagZone | (role == KeyRole::Ksk ? kDnskeyFlagSep : 0);
    z.dnskey.public_key = z.key.public_key();
    z.key_tag = z.dnskey.key_tag();
    return z;
}

ZoneSigningKey ZoneSigningKey::generate(KeyRole role) { return from_key(Ed25519Key::generate(), role); }

ZoneKeys ZoneKeys::generate() {
    return {ZoneSigningKey::generate(KeyRole::Ksk), ZoneSigningKey::generate(KeyRole::Zsk)};
}

ZoneKeys ZoneKeys::derive(const std::string &seed) {
    auto ksk = sha256(to_bytes("ksk:" + seed));
    auto zsk = sha256(to_bytes("zsk:" + seed));
    return {ZoneSigningKey::from_key(Ed25519Key::from_seed(ksk), KeyRole::Ksk),
            ZoneSigningKey::from_key(Ed25519Key::from_seed(zsk), KeyRole::Zsk)};
}

Bytes rrset_signing_input(const ResourceRecordSet &rrset, const RrsigRdata &rrsig) {
    ByteWriter w;
    w.raw(rrsig.signed_prefix());
    auto rdatas = rrset.rdatas;
    std::sort(rdatas.begin(), rdatas.end());
    rdatas.erase(std::unique(rdatas.begin(), rdatas.end()), rdatas.end());
    Bytes owner = rrset.owner.canonical_wire();
    for (const auto &rd : rdatas) {
        w.raw(owner);
        w.u16(static_cast<std::uint16_t>(rrset.type));
        w.u16(rrset.rrclass);
        w.u32(rrsig.original_ttl);
        w.u16(static_cast<std::uint16_t>(rd.size()));
        w.raw(rd);
    }
    return w.take();
}

RrsigRdata sign_rrset(const ResourceRecordSet &rrset, const ZoneSigningKey &key, const DnsName &signer,
                      ValidityWindow validity) {
    if (!key.key.has_private()) throw DnssecError("KeyUnusable: signing key has no private half");
    if (!usable(key.dnskey)) throw DnssecError("KeyUnusable: not a zone key of a supported algorithm");
    if (validity.expiration <= validity.inception) throw DnssecError("KeyUnusable: empty validity window");
    if (!rrset.owner.is_subdomain_of(signer)) throw DnssecError("KeyUnusable: owner is outside the signer's zone");
    RrsigRdata sig;
    sig.type_covered = rrset.type;
    sig.algorithm = key.dnskey.algorithm;
    sig.labels = static_cast<std::uint8_t>(rrset.owner.label_count());
    sig.original_ttl = rrset.ttl;
    sig.inception = to_wire_time(validity.inception);
    sig.expiration = to_wire_time(validity.expiration);
    sig.key_tag = key.key_tag;
    sig.signer = signer.lowercase();
    sig.signature = key.key.sign(rrset_signing_input(rrset, sig));
    return sig;
}

DsRdata compute_ds(const DnsName &owner, const DnskeyRdata &dnskey) {
    Bytes input = owner.canonical_wire();
    Bytes rdata = encode_dnskey_rdata(dnskey);
    input.insert(input.end(), rdata.begin(), rdata.end());
    auto digest = sha256(input);
    return {compute_key_tag(rdata), dnskey.algorithm, kDigestSha256, Bytes(digest.begin(), digest.end())};
}

std::string to_string(BogusReason r) {
    switch (r) {
    case BogusReason::SignatureInvalid: return "SignatureInvalid";
    case BogusReason::Expired: return "Expired";
    case BogusReason::NotYetValid: return "NotYetValid";
    case BogusReason::KeyTagMismatch: return "KeyTagMismatch";
    case BogusReason::BrokenDelegation: return "BrokenDelegation";
    case BogusReason::Malformed: return "Malformed";
    }
    return "?";
}

ValidationResult verify_rrsig(const ResourceRecordSet &rrset, const RrsigRdata &rrsig, const DnskeyRdata &dnskey,
                              UnixTime now) {
    if (rrsig.type_covered != rrset.type)
        return ValidationResult::bogus(BogusReason::SignatureInvalid, "RRSIG covers another type");
    if (rrsig.algorithm != kAlgorithmEd25519 || !usable(dnskey) || dnskey.algorithm != rrsig.algorithm)
        return ValidationResult::bogus(BogusReason::SignatureInvalid, "unsupported algorithm or unusable key");
    // Wildcard expansion is not supported: the label count must equal the owner's.
    if (rrsig.labels != rrset.owner.label_count())
        return ValidationResult::bogus(BogusReason::SignatureInvalid, "RRSIG label count mismatch");
    if (!rrset.owner.is_subdomain_of(rrsig.signer))
        return ValidationResult::bogus(BogusReason::BrokenDelegation, "owner outside signer zone");
    std::uint32_t t = to_wire_time(now);
    if (t > rrsig.expiration) return ValidationResult::bogus(BogusReason::Expired, "RRSIG expired");
    if (t < rrsig.inception) return ValidationResult::bogus(BogusReason::NotYetValid, "RRSIG not yet valid");
    auto key = Ed25519Key::from_public(dnskey.public_key);
    if (!key.verify(rrset_signing_input(rrset, rrsig), rrsig.signature))
        return ValidationResult::bogus(BogusReason::SignatureInvalid,
                                       "signature over " + rrset.owner.to_string() + " " + to_string(rrset.type) +
                                           " does not verify");
    return ValidationResult::ok();
}

ValidationResult validate_chain(const SignedRRset &leaf, std::span<const ZoneCut> supporting,
                                const TrustAnchor &anchor, UnixTime now) {
    if (leaf.rrsigs.empty())
        return ValidationResult::bogus(BogusReason::SignatureInvalid, "leaf RRset is unsigned");

    // The zone that signed the leaf, taken from its first decodable RRSIG.
    std::optional<DnsName> signer;
    for (const auto &raw : leaf.rrsigs) {
        try {
            signer = decode_rrsig_rdata(raw).signer;
            break;
        } catch (const DnsError &) {
        }
    }
    if (!signer) return ValidationResult::bogus(BogusReason::Malformed, "no decodable leaf RRSIG");
    if (!signer->is_subdomain_of(anchor.zone) || !leaf.rrset.owner.is_subdomain_of(*signer))
        return ValidationResult::bogus(BogusReason::BrokenDelegation,
                                       "signer " + signer->to_string() + " is not below anchor " +
                                           anchor.zone.to_string());

    // The signer must be the closest enclosing zone we know of.
    for (const auto &cut : supporting)
        if (leaf.rrset.owner.is_subdomain_of(cut.zone) && cut.zone.is_subdomain_of(*signer) && cut.zone != *signer)
            return ValidationResult::bogus(BogusReason::BrokenDelegation,
                                           "signer " + signer->to_string() + " is above zone cut " +
                                               cut.zone.to_string());

    // Zone cuts from the anchor down to the signer, shallowest first.
    std::vector<const ZoneCut *> path;
    for (const auto &cut : supporting)
        if (cut.zone.is_subdomain_of(anchor.zone) && signer->is_subdomain_of(cut.zone)) path.push_back(&cut);
    std::sort(path.begin(), path.end(),
              [](const ZoneCut *a, const ZoneCut *b) { return a->zone.label_count() < b->zone.label_count(); });
    if (path.empty() || path.front()->zone != anchor.zone)
        return ValidationResult::bogus(BogusReason::BrokenDelegation, "no DNSKEY set for anchor zone");
    if (path.back()->zone != *signer)
        return ValidationResult::bogus(BogusReason::BrokenDelegation, "no DNSKEY set for " + signer->to_string());
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path[i]->zone == path[i - 1]->zone)
            return ValidationResult::bogus(BogusReason::BrokenDelegation, "duplicate zone cut " + path[i]->zone.to_string());

    ValidationResult error;
    auto keys = enter_zone(*path.front(), {anchor.ds}, now, error);
    if (!keys) return error;

    for (std::size_t i = 1; i < path.size(); ++i) {
        const ZoneCut &cut = *path[i];
        const ZoneCut &parent = *path[i - 1];
        if (!cut.ds || cut.ds->rrset.type != RRType::DS || cut.ds->rrset.owner != cut.zone)
            return ValidationResult::bogus(BogusReason::BrokenDelegation, "missing DS for " + cut.zone.to_string());
        auto r = verify_with_keys(*cut.ds, parent.zone, *keys, now);
        if (!r.secure) return r;
        std::vector<DsRdata> ds_set;
        for (const auto &raw : cut.ds->rrset.rdatas) {
            try {
                ds_set.push_back(decode_ds_rdata(raw));
            } catch (const DnsError &) {
            }
        }
        keys = enter_zone(cut, ds_set, now, error);
        if (!keys) return error;
    }

    return verify_with_keys(leaf, *signer, *keys, now);
}

}  // namespace sdsec
