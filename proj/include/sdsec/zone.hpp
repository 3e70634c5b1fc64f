#pragma once

// Service catalog, signed zone construction and the authoritative responder.

#include "sdsec/dnssec.hpp"
#include "sdsec/sd_wire.hpp"
#include "sdsec/service_namespace.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdsec {

enum class ZoneErrc { DuplicateInstance, InvalidCertificate, InvalidDelegation, InvalidCatalog };

std::string to_string(ZoneErrc code);

class ZoneError : public std::runtime_error {
public:
    ZoneError(ZoneErrc code, const std::string &what) : std::runtime_error(to_string(code) + ": " + what), code_(code) {}
    [[nodiscard]] ZoneErrc code() const { return code_; }

private:
    ZoneErrc code_;
};

struct ServiceCatalogEntry {
    ServiceDescription description;  // concrete
    EndpointInfo endpoint;
    Bytes certificate;  // DER
    std::vector<std::uint16_t> eventgroups;
    std::string private_key_pem;  // optional; only the publisher needs it
};

inline constexpr std::uint32_t kDefaultZoneTtl = 3600;

struct ServiceCatalog {
    DnsName parent = default_parent_domain();
    std::optional<DnsName> anchor_zone;  // delegating zone above `parent`
    std::uint32_t ttl = kDefaultZoneTtl;
    std::optional<std::string> key_seed;
    std::vector<ServiceCatalogEntry> entries;

    [[nodiscard]] const ServiceCatalogEntry *find(std::uint16_t service_id, std::uint16_t instance_id) const;
};

/// JSON catalog. Relative certificate and key paths resolve against `base_dir`.
ServiceCatalog parse_catalog(const std::string &json_text, const std::filesystem::path &base_dir);
ServiceCatalog load_catalog(const std::filesystem::path &path);

class SignedZone {
public:
    explicit SignedZone(DnsName origin) : origin_(std::move(origin)) {}

    [[nodiscard]] const DnsName &origin() const { return origin_; }
    [[nodiscard]] const SignedRRset *find(const DnsName &owner, RRType type) const;
    /// True when `name` owns records or is an empty non-terminal above an owner.
    [[nodiscard]] bool name_exists(const DnsName &name) const;
    [[nodiscard]] std::vector<DnsName> owners() const;
    [[nodiscard]] std::size_t rrset_count() const { return rrsets_.size(); }
    [[nodiscard]] std::size_t rrsig_count() const;
    [[nodiscard]] const std::map<std::pair<DnsName, std::uint16_t>, SignedRRset> &rrsets() const { return rrsets_; }

    void put(SignedRRset set);
    SignedRRset *find_mutable(const DnsName &owner, RRType type);

private:
    DnsName origin_;
    std::map<std::pair<DnsName, std::uint16_t>, SignedRRset> rrsets_;
};

/// Default signature validity: one hour in the past to thirty days ahead of `now`.
ValidityWindow default_validity(UnixTime now);

/// Signs every RRset of the catalog under `parent`: SVCB sets at the six valid names of
/// each entry, one TLSA set per entry and the apex DNSKEY set.
SignedZone build_zone(const std::vector<ServiceCatalogEntry> &catalog, const DnsName &parent, const ZoneKeys &keys,
                      ValidityWindow validity, std::uint32_t ttl = kDefaultZoneTtl);

/// A zone holding only its DNSKEY set and signed DS sets for the given child zones.
SignedZone build_delegating_zone(const DnsName &origin, const ZoneKeys &keys,
                                 const std::vector<std::pair<DnsName, DnskeyRdata>> &child_ksks,
                                 ValidityWindow validity, std::uint32_t ttl = kDefaultZoneTtl);

struct ZoneBundle {
    std::vector<SignedZone> zones;
    TrustAnchor anchor;
};

/// Builds the service zone and, when the catalog names an anchor zone above it, the
/// delegating anchor zone. `anchor_keys` is used only in the latter case.
ZoneBundle build_zones(const ServiceCatalog &catalog, const ZoneKeys &service_keys, const ZoneKeys &anchor_keys,
                       ValidityWindow validity);

/// Stateless responder over a fixed set of signed zones.
class AuthoritativeServer {
public:
    explicit AuthoritativeServer(std::vector<SignedZone> zones);

    DnsMessage answer(const DnsMessage &query) const;
    /// Undecodable queries get FORMERR; datagrams shorter than a header are dropped (empty result).
    Bytes answer(ByteView query) const;

    [[nodiscard]] const std::vector<SignedZone> &zones() const { return zones_; }
    [[nodiscard]] std::uint64_t queries_answered() const { return answered_.load(); }

private:
    const SignedZone *zone_for(const DnsName &name, RRType type) const;

    std::vector<SignedZone> zones_;
    mutable std::atomic<std::uint64_t> answered_{0};
};

}  // namespace sdsec
