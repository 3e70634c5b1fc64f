#pragma once

// DNS names, record sets, RDATA codecs (SVCB, TLSA, DNSKEY, DS, RRSIG) and message framing.

#include "sdsec/bytes.hpp"
#include "sdsec/sd_wire.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdsec {

enum class DnsErrc {
    Truncated,
    IdMismatch,
    FormErr,
    InvalidName,
    DuplicateParamKey,
    MissingIdentityParam,
    UnsupportedUsage,
    UnsupportedSelector,
    UnsupportedMatching,
};

std::string to_string(DnsErrc code);

class DnsError : public std::runtime_error {
public:
    DnsError(DnsErrc code, const std::string &what)
        : std::runtime_error(to_string(code) + ": " + what), code_(code) {}
    [[nodiscard]] DnsErrc code() const { return code_; }

private:
    DnsErrc code_;
};

/// Absolute domain name. Labels keep their case; comparison is case-insensitive and
/// ordering follows DNSSEC canonical order.
class DnsName {
public:
    DnsName() = default;  // root

    /// Parses dotted presentation format; a missing trailing dot is accepted.
    static DnsName parse(std::string_view text);
    static DnsName from_labels(std::vector<std::string> labels);

    [[nodiscard]] const std::vector<std::string> &labels() const { return labels_; }
    [[nodiscard]] std::size_t label_count() const { return labels_.size(); }
    [[nodiscard]] bool is_root() const { return labels_.empty(); }

    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] Bytes to_wire() const;
    [[nodiscard]] Bytes canonical_wire() const;  // lowercased
    [[nodiscard]] DnsName lowercase() const;

    [[nodiscard]] bool is_subdomain_of(const DnsName &ancestor) const;  // includes equality
    [[nodiscard]] DnsName parent() const;
    [[nodiscard]] DnsName prepend(std::string label) const;

    friend bool operator==(const DnsName &a, const DnsName &b);
    friend std::strong_ordering operator<=>(const DnsName &a, const DnsName &b);

private:
    std::vector<std::string> labels_;
};

/// Reads an uncompressed name (RDATA context).
DnsName read_name(ByteReader &r);
/// Reads a possibly compressed name; pointers resolve against the reader's whole buffer.
DnsName read_compressed_name(ByteReader &r);

enum class RRType : std::uint16_t {
    A = 1,
    NS = 2,
    SOA = 6,
    OPT = 41,
    DS = 43,
    RRSIG = 46,
    DNSKEY = 48,
    TLSA = 52,
    SVCB = 64,
};

std::string to_string(RRType t);

inline constexpr std::uint16_t kClassIN = 1;

struct ResourceRecordSet {
    DnsName owner;
    RRType type = RRType::A;
    std::uint16_t rrclass = kClassIN;
    std::uint32_t ttl = 0;
    std::vector<Bytes> rdatas;

    /// Sorts rdatas by wire form and drops duplicates.
    void canonicalize();

    friend bool operator==(const ResourceRecordSet &, const ResourceRecordSet &) = default;
};

/// An RRset together with the raw RDATA of the RRSIGs covering it.
struct SignedRRset {
    ResourceRecordSet rrset;
    std::vector<Bytes> rrsigs;
    friend bool operator==(const SignedRRset &, const SignedRRset &) = default;
};

// --- SVCB -------------------------------------------------------------------

namespace svc_param {
inline constexpr std::uint16_t kPort = 3;
inline constexpr std::uint16_t kIpv4Hint = 4;
inline constexpr std::uint16_t kProtocol = 65280;
inline constexpr std::uint16_t kInstance = 65281;
inline constexpr std::uint16_t kMajor = 65282;
inline constexpr std::uint16_t kMinor = 65283;
}  // namespace svc_param

/// Generic SVCB RDATA. Params are keyed by SvcParamKey and held as raw values.
struct SvcbRdata {
    std::uint16_t priority = 1;
    DnsName target;
    std::map<std::uint16_t, Bytes> params;
    friend bool operator==(const SvcbRdata &, const SvcbRdata &) = default;
};

Bytes encode_svcb_rdata(const SvcbRdata &rd);
SvcbRdata decode_svcb_rdata(ByteView rdata);

/// SVCB record describing one SOME/IP service instance endpoint.
struct SvcbServiceRecord {
    std::uint16_t priority = 1;
    DnsName target;  // root: the endpoint is the owner itself
    std::uint16_t port = 0;
    Ipv4Address ipv4hint;
    L4Protocol protocol = L4Protocol::Udp;
    std::uint16_t instance = 0;
    std::uint8_t major = 0;
    std::uint32_t minor = 0;

    [[nodiscard]] EndpointInfo endpoint() const { return {ipv4hint, protocol, port}; }
    [[nodiscard]] ServiceDescription description(std::uint16_t service_id) const {
        return {service_id, instance, major, minor};
    }

    friend bool operator==(const SvcbServiceRecord &, const SvcbServiceRecord &) = default;
};

SvcbRdata to_svcb(const SvcbServiceRecord &rec);
/// Throws MissingIdentityParam when any endpoint or identity param is absent.
SvcbServiceRecord to_service_record(const SvcbRdata &rd);

Bytes encode_svcb_rdata(const SvcbServiceRecord &rec);
SvcbServiceRecord decode_service_svcb(ByteView rdata);

// --- TLSA -------------------------------------------------------------------

/// DANE-EE, full certificate, exact match.
struct TlsaCertRecord {
    std::uint8_t usage = 3;
    std::uint8_t selector = 0;
    std::uint8_t matching_type = 0;
    Bytes cert_data;
    friend bool operator==(const TlsaCertRecord &, const TlsaCertRecord &) = default;
};

Bytes encode_tlsa_rdata(const TlsaCertRecord &rec);
TlsaCertRecord decode_tlsa_rdata(ByteView rdata);

/// DANE owner name: _<port>._<proto>.<service name>
DnsName tlsa_owner_name(const DnsName &service_name, std::uint16_t port, L4Protocol protocol);

// --- DNSSEC records ---------------------------------------------------------

inline constexpr std::uint8_t kAlgorithmEd25519 = 15;
inline constexpr std::uint8_t kDigestSha256 = 2;
inline constexpr std::uint16_t kDnskeyFlagZone = 0x0100;
inline constexpr std::uint16_t kDnskeyFlagSep = 0x0001;

struct DnskeyRdata {
    std::uint16_t flags = kDnskeyFlagZone;
    std::uint8_t protocol = 3;
    std::uint8_t algorithm = kAlgorithmEd25519;
    Bytes public_key;

    [[nodiscard]] std::uint16_t key_tag() const;
    [[nodiscard]] bool is_sep() const { return flags & kDnskeyFlagSep; }

    friend bool operator==(const DnskeyRdata &, const DnskeyRdata &) = default;
};

Bytes encode_dnskey_rdata(const DnskeyRdata &rd);
DnskeyRdata decode_dnskey_rdata(ByteView rdata);
/// Key tag checksum over raw DNSKEY RDATA.
std::uint16_t compute_key_tag(ByteView dnskey_rdata);

struct DsRdata {
    std::uint16_t key_tag = 0;
    std::uint8_t algorithm = kAlgorithmEd25519;
    std::uint8_t digest_type = kDigestSha256;
    Bytes digest;
    friend bool operator==(const DsRdata &, const DsRdata &) = default;
};

Bytes encode_ds_rdata(const DsRdata &rd);
DsRdata decode_ds_rdata(ByteView rdata);
/// "<zone> <tag> <alg> <digest type> <hex>"
std::string ds_to_text(const DnsName &zone, const DsRdata &ds);
std::pair<DnsName, DsRdata> ds_from_text(std::string_view text);

struct RrsigRdata {
    RRType type_covered = RRType::A;
    std::uint8_t algorithm = kAlgorithmEd25519;
    std::uint8_t labels = 0;
    std::uint32_t original_ttl = 0;
    std::uint32_t expiration = 0;
    std::uint32_t inception = 0;
    std::uint16_t key_tag = 0;
    DnsName signer;
    Bytes signature;

    /// RDATA with the signature omitted and the signer name in canonical form.
    [[nodiscard]] Bytes signed_prefix() const;

    friend bool operator==(const RrsigRdata &, const RrsigRdata &) = default;
};

Bytes encode_rrsig_rdata(const RrsigRdata &rd);
RrsigRdata decode_rrsig_rdata(ByteView rdata);

// --- messages ---------------------------------------------------------------

enum class Rcode : std::uint8_t {
    NoError = 0,
    FormErr = 1,
    ServFail = 2,
    NxDomain = 3,
    NotImp = 4,
    Refused = 5,
};

std::string to_string(Rcode r);

struct DnsQuestion {
    DnsName name;
    RRType type = RRType::A;
    std::uint16_t qclass = kClassIN;
    friend bool operator==(const DnsQuestion &, const DnsQuestion &) = default;
};

struct DnsRecord {
    DnsName owner;
    RRType type = RRType::A;
    std::uint16_t rrclass = kClassIN;
    std::uint32_t ttl = 0;
    Bytes rdata;
    friend bool operator==(const DnsRecord &, const DnsRecord &) = default;
};

struct DnsMessage {
    std::uint16_t id = 0;
    bool qr = false;
    std::uint8_t opcode = 0;
    bool aa = false;
    bool tc = false;
    bool rd = false;
    bool ra = false;
    bool ad = false;
    bool cd = false;
    Rcode rcode = Rcode::NoError;
    std::vector<DnsQuestion> questions;
    std::vector<DnsRecord> answers;
    std::vector<DnsRecord> authority;
    std::vector<DnsRecord> additional;  // excluding OPT
    bool edns = false;
    bool dnssec_ok = false;
    std::uint16_t udp_payload_size = 4096;

    friend bool operator==(const DnsMessage &, const DnsMessage &) = default;
};

inline constexpr std::uint16_t kEdnsUdpSize = 4096;

Bytes encode_dns_message(const DnsMessage &msg);
DnsMessage decode_dns_message(ByteView buf);

/// Recursion-desired query with an EDNS0 OPT (4096, DO=1).
Bytes encode_dns_query(const DnsName &name, RRType type, std::uint16_t id);

struct DnsResponse {
    Rcode rcode = Rcode::NoError;
    bool authenticated = false;  // AD bit
    std::vector<SignedRRset> rrsets;
};

/// Decodes a response to query `id`, grouping answer records into RRsets and pairing
/// each with the RRSIGs that cover it.
DnsResponse decode_dns_response(ByteView buf, std::uint16_t id);

/// Groups records into RRsets (by owner and type) and pairs RRSIGs by type covered.
std::vector<SignedRRset> group_rrsets(const std::vector<DnsRecord> &records);
/// Flattens an RRset and its signatures back into records.
void append_records(std::vector<DnsRecord> &out, const SignedRRset &set);

}  // namespace sdsec
