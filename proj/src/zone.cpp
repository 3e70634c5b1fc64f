#include "sdsec/zone.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sdsec {

std::string to_string(ZoneErrc code) {
    switch (code) {
    case ZoneErrc::DuplicateInstance: return "DuplicateInstance";
    case ZoneErrc::InvalidCertificate: return "InvalidCertificate";
    case ZoneErrc::InvalidDelegation: return "InvalidDelegation";
    case ZoneErrc::InvalidCatalog: return "InvalidCatalog";
    }
    return "?";
}

const ServiceCatalogEntry *ServiceCatalog::find(std::uint16_t service_id, std::uint16_t instance_id) const {
    for (const auto &e : entries)
        if (e.description.service_id == service_id && e.description.instance_id == instance_id) return &e;
    return nullptr;
}

// --- catalog ------------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void bad_catalog(const std::string &what) { throw ZoneError(ZoneErrc::InvalidCatalog, what); }

// Integers may be given as JSON numbers or as strings ("0x1234" or decimal).
std::uint64_t as_uint(const json &v, const std::string &field, std::uint64_t max) {
    std::uint64_t out = 0;
    if (v.is_number_unsigned()) {
        out = v.get<std::uint64_t>();
    } else if (v.is_string()) {
        const auto s = v.get<std::string>();
        try {
            std::size_t used = 0;
            out = std::stoull(s, &used, 0);
            if (used != s.size()) bad_catalog(field + ": trailing characters in '" + s + "'");
        } catch (const std::logic_error &) {
            bad_catalog(field + ": not a number: '" + s + "'");
        }
    } else {
        bad_catalog(field + ": expected an unsigned integer");
    }
    if (out > max) bad_catalog(field + ": value out of range");
    return out;
}

const json &require(const json &obj, const char *key, const std::string &where) {
    auto it = obj.find(key);
    if (it == obj.end()) bad_catalog(where + ": missing '" + key + "'");
    return *it;
}

std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) bad_catalog("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Bytes load_certificate(const std::filesystem::path &p) {
    std::string text = read_file(p);
    if (text.find("-----BEGIN") != std::string::npos) {
        try {
            return certificate_der_from_pem(text);
        } catch (const CryptoError &e) {
            throw ZoneError(ZoneErrc::InvalidCertificate, p.string() + ": " + e.what());
        }
    }
    return {text.begin(), text.end()};
}

L4Protocol parse_protocol(const json &v, const std::string &where) {
    if (!v.is_string()) bad_catalog(where + ": protocol must be \"udp\" or \"tcp\"");
    auto s = v.get<std::string>();
    for (auto &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "udp") return L4Protocol::Udp;
    if (s == "tcp") return L4Protocol::Tcp;
    bad_catalog(where + ": unknown protocol '" + s + "'");
}

}  // namespace

ServiceCatalog parse_catalog(const std::string &json_text, const std::filesystem::path &base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        bad_catalog(e.what());
    }
    if (!doc.is_object()) bad_catalog("top level must be an object");

    ServiceCatalog cat;
    try {
        if (doc.contains("parent")) cat.parent = DnsName::parse(doc["parent"].get<std::string>()).lowercase();
        if (doc.contains("anchor_zone") && !doc["anchor_zone"].is_null())
            cat.anchor_zone = DnsName::parse(doc["anchor_zone"].get<std::string>()).lowercase();
        if (doc.contains("ttl")) cat.ttl = static_cast<std::uint32_t>(as_uint(doc["ttl"], "ttl", 0x7FFFFFFF));
        if (doc.contains("key_seed") && !doc["key_seed"].is_null()) cat.key_seed = doc["key_seed"].get<std::string>();
    } catch (const json::type_error &e) {
        bad_catalog(e.what());
    } catch (const DnsError &e) {
        bad_catalog(e.what());
    }

    auto resolve_path = [&](const std::string &p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    const json &services = doc.contains("services") ? doc["services"] : json::array();
    if (!services.is_array()) bad_catalog("'services' must be an array");
    for (std::size_t i = 0; i < services.size(); ++i) {
        const json &s = services[i];
        const std::string where = "services[" + std::to_string(i) + "]";
        if (!s.is_object()) bad_catalog(where + ": expected an object");
        ServiceCatalogEntry e;
        e.description.service_id = static_cast<std::uint16_t>(as_uint(require(s, "service", where), "service", 0xFFFF));
        e.description.instance_id =
            static_cast<std::uint16_t>(as_uint(require(s, "instance", where), "instance", 0xFFFE));
        e.description.major_version = static_cast<std::uint8_t>(as_uint(require(s, "major", where), "major", 0xFE));
        e.description.minor_version =
            static_cast<std::uint32_t>(as_uint(require(s, "minor", where), "minor", 0xFFFFFFFE));
        try {
            e.endpoint.ip = Ipv4Address::parse(require(s, "ip", where).get<std::string>());
        } catch (const std::exception &ex) {
            bad_catalog(where + ": ip: " + ex.what());
        }
        e.endpoint.port = static_cast<std::uint16_t>(as_uint(require(s, "port", where), "port", 0xFFFF));
        e.endpoint.protocol = parse_protocol(require(s, "protocol", where), where);
        if (s.contains("eventgroups")) {
            if (!s["eventgroups"].is_array()) bad_catalog(where + ": eventgroups must be an array");
            for (const auto &g : s["eventgroups"])
                e.eventgroups.push_back(static_cast<std::uint16_t>(as_uint(g, "eventgroup", 0xFFFF)));
        }
        const json &cert = require(s, "certificate", where);
        if (!cert.is_string()) bad_catalog(where + ": certificate must be a path");
        e.certificate = load_certificate(resolve_path(cert.get<std::string>()));
        if (s.contains("private_key") && !s["private_key"].is_null())
            e.private_key_pem = read_file(resolve_path(s["private_key"].get<std::string>()));
        cat.entries.push_back(std::move(e));
    }
    return cat;
}

ServiceCatalog load_catalog(const std::filesystem::path &path) {
    return parse_catalog(read_file(path), path.parent_path());
}

// --- zone ---------------------------------------------------------------------

const SignedRRset *SignedZone::find(const DnsName &owner, RRType type) const {
    auto it = rrsets_.find({owner, static_cast<std::uint16_t>(type)});
    return it == rrsets_.end() ? nullptr : &it->second;
}

SignedRRset *SignedZone::find_mutable(const DnsName &owner, RRType type) {
    auto it = rrsets_.find({owner, static_cast<std::uint16_t>(type)});
    return it == rrsets_.end() ? nullptr : &it->second;
}

bool SignedZone::name_exists(const DnsName &name) const {
    for (const auto &[key, set] : rrsets_)
        if (key.first.is_subdomain_of(name)) return true;
    return false;
}

std::vector<DnsName> SignedZone::owners() const {
    std::vector<DnsName> out;
    for (const auto &[key, set] : rrsets_)
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    return out;
}

std::size_t SignedZone::rrsig_count() const {
    std::size_t n = 0;
    for (const auto &[key, set] : rrsets_) n += set.rrsigs.size();
    return n;
}

void SignedZone::put(SignedRRset set) {
    auto key = std::make_pair(set.rrset.owner, static_cast<std::uint16_t>(set.rrset.type));
    rrsets_[key] = std::move(set);
}

ValidityWindow default_validity(UnixTime now) {
    return {now - std::chrono::hours(1), now + std::chrono::hours(24 * 30)};
}

namespace {

void sign_all(SignedZone &zone, const ZoneKeys &keys, ValidityWindow validity) {
    std::vector<ResourceRecordSet> sets;
    for (const auto &[key, set] : zone.rrsets()) sets.push_back(set.rrset);
    for (auto &rrset : sets) {
        rrset.canonicalize();
        const auto &signer = rrset.type == RRType::DNSKEY ? keys.ksk : keys.zsk;
        zone.put({rrset, {encode_rrsig_rdata(sign_rrset(rrset, signer, zone.origin(), validity))}});
    }
}

void add_apex(SignedZone &zone, const ZoneKeys &keys, std::uint32_t ttl) {
    zone.put({{zone.origin(), RRType::DNSKEY, kClassIN, ttl,
               {encode_dnskey_rdata(keys.ksk.dnskey), encode_dnskey_rdata(keys.zsk.dnskey)}},
              {}});
}

std::string describe(const ServiceDescription &d) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "service 0x%04x instance 0x%04x", d.service_id, d.instance_id.value_or(0xFFFF));
    return buf;
}

void add_rdata(SignedZone &zone, const DnsName &owner, RRType type, std::uint32_t ttl, Bytes rdata) {
    if (auto *set = zone.find_mutable(owner, type)) {
        set->rrset.rdatas.push_back(std::move(rdata));
        return;
    }
    zone.put({{owner, type, kClassIN, ttl, {std::move(rdata)}}, {}});
}

}  // namespace

SignedZone build_zone(const std::vector<ServiceCatalogEntry> &catalog, const DnsName &parent, const ZoneKeys &keys,
                      ValidityWindow validity, std::uint32_t ttl) {
    SignedZone zone(parent.lowercase());
    add_apex(zone, keys, ttl);

    std::set<std::pair<std::uint16_t, std::uint16_t>> seen;
    for (const auto &e : catalog) {
        const auto &d = e.description;
        if (!d.is_concrete()) throw ZoneError(ZoneErrc::InvalidCatalog, "catalog entries must be concrete");
        if (!seen.insert({d.service_id, *d.instance_id}).second)
            throw ZoneError(ZoneErrc::DuplicateInstance, describe(d));
        try {
            (void)certificate_public_key(e.certificate);
        } catch (const CryptoError &ex) {
            throw ZoneError(ZoneErrc::InvalidCertificate, ex.what());
        }

        SvcbServiceRecord rec;
        rec.port = e.endpoint.port;
        rec.ipv4hint = e.endpoint.ip;
        rec.protocol = e.endpoint.protocol;
        rec.instance = *d.instance_id;
        rec.major = *d.major_version;
        rec.minor = *d.minor_version;
        const Bytes svcb = encode_svcb_rdata(rec);
        for (const auto &name : enumerate_valid_names(d, zone.origin()))
            add_rdata(zone, name.to_dns_name(), RRType::SVCB, ttl, svcb);

        add_rdata(zone, tlsa_owner_name(service_name(d, zone.origin()), e.endpoint.port, e.endpoint.protocol),
                  RRType::TLSA, ttl, encode_tlsa_rdata({3, 0, 0, e.certificate}));
    }
    sign_all(zone, keys, validity);
    return zone;
}

SignedZone build_delegating_zone(const DnsName &origin, const ZoneKeys &keys,
                                 const std::vector<std::pair<DnsName, DnskeyRdata>> &child_ksks,
                                 ValidityWindow validity, std::uint32_t ttl) {
    SignedZone zone(origin.lowercase());
    add_apex(zone, keys, ttl);
    for (const auto &[child, ksk] : child_ksks) {
        if (!child.is_subdomain_of(zone.origin()) || child == zone.origin())
            throw ZoneError(ZoneErrc::InvalidDelegation,
                            child.to_string() + " is not below " + zone.origin().to_string());
        add_rdata(zone, child.lowercase(), RRType::DS, ttl, encode_ds_rdata(compute_ds(child.lowercase(), ksk)));
    }
    sign_all(zone, keys, validity);
    return zone;
}

ZoneBundle build_zones(const ServiceCatalog &catalog, const ZoneKeys &service_keys, const ZoneKeys &anchor_keys,
                       ValidityWindow validity) {
    ZoneBundle out;
    const DnsName parent = catalog.parent.lowercase();
    out.zones.push_back(build_zone(catalog.entries, parent, service_keys, validity, catalog.ttl));
    if (!catalog.anchor_zone || *catalog.anchor_zone == parent) {
        out.anchor = {parent, compute_ds(parent, service_keys.ksk.dnskey)};
        return out;
    }
    const DnsName anchor = catalog.anchor_zone->lowercase();
    out.zones.push_back(build_delegating_zone(anchor, anchor_keys, {{parent, service_keys.ksk.dnskey}}, validity,
                                              catalog.ttl));
    out.anchor = {anchor, compute_ds(anchor, anchor_keys.ksk.dnskey)};
    return out;
}

// --- responder ----------------------------------------------------------------

AuthoritativeServer::AuthoritativeServer(std::vector<SignedZone> zones) : zones_(std::move(zones)) {}

const SignedZone *AuthoritativeServer::zone_for(const DnsName &name, RRType type) const {
    // DS records live on the parent side of a cut.
    const DnsName lookup = type == RRType::DS && !name.is_root() ? name.parent() : name;
    const SignedZone *best = nullptr;
    for (const auto &z : zones_)
        if (lookup.is_subdomain_of(z.origin()) && (!best || z.origin().label_count() > best->origin().label_count()))
            best = &z;
    if (type == RRType::DS && !best) {
        for (const auto &z : zones_)
            if (z.origin() == name) return &z;
    }
    return best;
}

DnsMessage AuthoritativeServer::answer(const DnsMessage &query) const {
    ++answered_;
    DnsMessage resp;
    resp.id = query.id;
    resp.qr = true;
    resp.opcode = query.opcode;
    resp.rd = query.rd;
    resp.cd = query.cd;
    resp.questions = query.questions;
    resp.edns = query.edns;
    resp.dnssec_ok = query.dnssec_ok;
    if (query.qr || query.questions.size() != 1) {
        resp.rcode = Rcode::FormErr;
        return resp;
    }
    if (query.opcode != 0) {
        resp.rcode = Rcode::NotImp;
        return resp;
    }
    const auto &q = query.questions.front();
    if (q.qclass != kClassIN) {
        resp.rcode = Rcode::Refused;
        return resp;
    }
    const SignedZone *zone = zone_for(q.name, q.type);
    if (!zone) {
        resp.rcode = Rcode::Refused;
        return resp;
    }
    resp.aa = true;
    if (const auto *set = zone->find(q.name, q.type)) {
        SignedRRset out = *set;
        if (!query.dnssec_ok) out.rrsigs.clear();
        append_records(resp.answers, out);
    } else if (!zone->name_exists(q.name)) {
        resp.rcode = Rcode::NxDomain;
    }
    return resp;
}

Bytes AuthoritativeServer::answer(ByteView query) const {
    if (query.size() < 12) return {};
    DnsMessage parsed;
    try {
        parsed = decode_dns_message(query);
    } catch (const std::exception &) {
        ++answered_;
        DnsMessage resp;
        resp.id = static_cast<std::uint16_t>(query[0] << 8 | query[1]);
        resp.qr = true;
        resp.opcode = static_cast<std::uint8_t>((query[2] >> 3) & 0x0F);
        resp.rcode = Rcode::FormErr;
        return encode_dns_message(resp);
    }
    if (parsed.qr) return {};  // never answer responses
    return encode_dns_message(answer(parsed));
}

}  // namespace sdsec
