#include "sdsec/dns.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace sdsec {

namespace {

[[noreturn]] void fail(DnsErrc code, const std::string &what) { throw DnsError(code, what); }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](char c) { return lower(c); });
    return s;
}

constexpr std::size_t kMaxLabel = 63;
constexpr std::size_t kMaxNameWire = 255;

void check_labels(const std::vector<std::string> &labels) {
    std::size_t wire = 1;
    for (const auto &l : labels) {
        if (l.empty()) fail(DnsErrc::InvalidName, "empty label");
        if (l.size() > kMaxLabel) fail(DnsErrc::InvalidName, "label longer than 63 bytes");
        wire += l.size() + 1;
    }
    if (wire > kMaxNameWire) fail(DnsErrc::InvalidName, "name longer than 255 bytes");
}

// Runs a decoder and maps buffer exhaustion to Truncated.
template <class F>
auto guarded(F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const ShortBuffer &) {
        fail(DnsErrc::Truncated, "unexpected end of buffer");
    }
}

DnsName read_name_impl(ByteReader &r, bool allow_compression) {
    std::vector<std::string> labels;
    std::size_t wire = 1;
    std::size_t resume = 0;
    bool jumped = false;
    int jumps = 0;
    for (;;) {
        std::uint8_t len = r.u8();
        if (len == 0) break;
        if ((len & 0xC0) == 0xC0) {
            if (!allow_compression) fail(DnsErrc::FormErr, "compression pointer in RDATA name");
            std::size_t target = (std::size_t{len & 0x3Fu} << 8) | r.u8();
            if (++jumps > 64) fail(DnsErrc::FormErr, "compression loop");
            if (!jumped) resume = r.position();
            jumped = true;
            if (target >= r.whole().size()) fail(DnsErrc::FormErr, "compression pointer out of range");
            r.seek(target);
            continue;
        }
        if (len & 0xC0) fail(DnsErrc::FormErr, "unsupported label type");
        auto bytes = r.take(len);
        wire += len + 1u;
        if (wire > kMaxNameWire) fail(DnsErrc::FormErr, "name longer than 255 bytes");
        std::string label(bytes.begin(), bytes.end());
        if (label.find('.') != std::string::npos) fail(DnsErrc::FormErr, "label contains a dot");
        labels.push_back(std::move(label));
    }
    if (jumped) r.seek(resume);
    return DnsName::from_labels(std::move(labels));
}

void write_name(ByteWriter &w, const DnsName &name) { w.raw(name.to_wire()); }

}  // namespace

std::string to_string(DnsErrc code) {
    switch (code) {
    case DnsErrc::Truncated: return "Truncated";
    case DnsErrc::IdMismatch: return "IdMismatch";
    case DnsErrc::FormErr: return "FormErr";
    case DnsErrc::InvalidName: return "InvalidName";
    case DnsErrc::DuplicateParamKey: return "DuplicateParamKey";
    case DnsErrc::MissingIdentityParam: return "MissingIdentityParam";
    case DnsErrc::UnsupportedUsage: return "UnsupportedUsage";
    case DnsErrc::UnsupportedSelector: return "UnsupportedSelector";
    case DnsErrc::UnsupportedMatching: return "UnsupportedMatching";
    }
    return "?";
}

// --- DnsName ----------------------------------------------------------------

DnsName DnsName::parse(std::string_view text) {
    if (text.empty()) fail(DnsErrc::InvalidName, "empty name");
    if (text == ".") return {};
    if (text.back() == '.') text.remove_suffix(1);
    std::vector<std::string> labels;
    std::size_t start = 0;
    for (;;) {
        auto dot = text.find('.', start);
        labels.emplace_back(text.substr(start, dot == std::string_view::npos ? dot : dot - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return from_labels(std::move(labels));
}

DnsName DnsName::from_labels(std::vector<std::string> labels) {
    check_labels(labels);
    DnsName n;
    n.labels_ = std::move(labels);
    return n;
}

std::string DnsName::to_string() const {
    if (labels_.empty()) return ".";
    std::string out;
    for (const auto &l : labels_) {
        out += l;
        out += '.';
    }
    return out;
}

Bytes DnsName::to_wire() const {
    Bytes out;
    for (const auto &l : labels_) {
        out.push_back(static_cast<std::uint8_t>(l.size()));
        out.insert(out.end(), l.begin(), l.end());
    }
    out.push_back(0);
    return out;
}

Bytes DnsName::canonical_wire() const { return lowercase().to_wire(); }

DnsName DnsName::lowercase() const {
    DnsName n;
    n.labels_.reserve(labels_.size());
    for (const auto &l : labels_) n.labels_.push_back(lower(l));
    return n;
}

bool DnsName::is_subdomain_of(const DnsName &ancestor) const {
    if (ancestor.labels_.size() > labels_.size()) return false;
    auto offset = labels_.size() - ancestor.labels_.size();
    for (std::size_t i = 0; i < ancestor.labels_.size(); ++i)
        if (lower(labels_[offset + i]) != lower(ancestor.labels_[i])) return false;
    return true;
}

DnsName DnsName::parent() const {
    DnsName n;
    if (!labels_.empty()) n.labels_.assign(labels_.begin() + 1, labels_.end());
    return n;
}

DnsName DnsName::prepend(std::string label) const {
    std::vector<std::string> labels;
    labels.reserve(labels_.size() + 1);
    labels.push_back(std::move(label));
    labels.insert(labels.end(), labels_.begin(), labels_.end());
    return from_labels(std::move(labels));
}

bool operator==(const DnsName &a, const DnsName &b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const DnsName &a, const DnsName &b) {
    // Canonical order: compare labels right to left, each as lowercase octets.
    auto ia = a.labels_.rbegin();
    auto ib = b.labels_.rbegin();
    for (; ia != a.labels_.rend() && ib != b.labels_.rend(); ++ia, ++ib) {
        auto la = lower(*ia);
        auto lb = lower(*ib);
        auto ua = reinterpret_cast<const unsigned char *>(la.data());
        auto ub = reinterpret_cast<const unsigned char *>(lb.data());
        auto c = std::lexicographical_compare_three_way(ua, ua + la.size(), ub, ub + lb.size());
        if (c != 0) return c;
    }
    return a.labels_.size() <=> b.labels_.size();
}

DnsName read_name(ByteReader &r) { return read_name_impl(r, false); }
DnsName read_compressed_name(ByteReader &r) { return read_name_impl(r, true); }

std::string to_string(RRType t) {
    switch (t) {
    case RRType::A: return "A";
    case RRType::NS: return "NS";
    case RRType::SOA: return "SOA";
    case RRType::OPT: return "OPT";
    case RRType::DS: return "DS";
    case RRType::RRSIG: return "RRSIG";
    case RRType::DNSKEY: return "DNSKEY";
    case RRType::TLSA: return "TLSA";
    case RRType::SVCB: return "SVCB";
    }
    return "TYPE" + std::to_string(static_cast<unsigned>(t));
}

void ResourceRecordSet::canonicalize() {
    std::sort(rdatas.begin(), rdatas.end());
    rdatas.erase(std::unique(rdatas.begin(), rdatas.end()), rdatas.end());
}

// --- SVCB -------------------------------------------------------------------

Bytes encode_svcb_rdata(const SvcbRdata &rd) {
    ByteWriter w;
    w.u16(rd.priority);
    write_name(w, rd.target);
    for (const auto &[key, value] : rd.params) {  // std::map iterates ascending
        if (value.size() > 0xFFFF) fail(DnsErrc::FormErr, "SvcParam value too long");
        w.u16(key);
        w.u16(static_cast<std::uint16_t>(value.size()));
        w.raw(value);
    }
    return w.take();
}

SvcbRdata decode_svcb_rdata(ByteView rdata) {
    return guarded([&] {
        ByteReader r(rdata);
        SvcbRdata rd;
        rd.priority = r.u16();
        rd.target = read_name(r);
        std::optional<std::uint16_t> last;
        while (!r.empty()) {
            std::uint16_t key = r.u16();
            std::uint16_t len = r.u16();
            auto value = r.take(len);
            if (last && key == *last) fail(DnsErrc::DuplicateParamKey, "SvcParamKey " + std::to_string(key));
            if (last && key < *last) fail(DnsErrc::FormErr, "SvcParamKeys not in ascending order");
            last = key;
            rd.params.emplace(key, Bytes(value.begin(), value.end()));
        }
        return rd;
    });
}

SvcbRdata to_svcb(const SvcbServiceRecord &rec) {
    SvcbRdata rd;
    rd.priority = rec.priority;
    rd.target = rec.target;
    auto put = [&](std::uint16_t key, auto emit) {
        ByteWriter w;
        emit(w);
        rd.params[key] = w.take();
    };
    put(svc_param::kPort, [&](ByteWriter &w) { w.u16(rec.port); });
    put(svc_param::kIpv4Hint, [&](ByteWriter &w) { w.u32(rec.ipv4hint.value); });
    put(svc_param::kProtocol, [&](ByteWriter &w) { w.u8(static_cast<std::uint8_t>(rec.protocol)); });
    put(svc_param::kInstance, [&](ByteWriter &w) { w.u16(rec.instance); });
    put(svc_param::kMajor, [&](ByteWriter &w) { w.u8(rec.major); });
    put(svc_param::kMinor, [&](ByteWriter &w) { w.u32(rec.minor); });
    return rd;
}

SvcbServiceRecord to_service_record(const SvcbRdata &rd) {
    if (rd.priority == 0) fail(DnsErrc::FormErr, "AliasMode SVCB record carries no endpoint");
    auto param = [&](std::uint16_t key, const char *name, std::size_t width) -> ByteReader {
        auto it = rd.params.find(key);
        if (it == rd.params.end()) fail(DnsErrc::MissingIdentityParam, std::string("missing ") + name);
        if (it->second.size() != width) fail(DnsErrc::FormErr, std::string("bad length for ") + name);
        return ByteReader(it->second);
    };
    SvcbServiceRecord rec;
    rec.priority = rd.priority;
    rec.target = rd.target;
    rec.port = param(svc_param::kPort, "port", 2).u16();
    // ipv4hint may list several addresses; the first is the endpoint.
    {
        auto it = rd.params.find(svc_param::kIpv4Hint);
        if (it == rd.params.end()) fail(DnsErrc::MissingIdentityParam, "missing ipv4hint");
        if (it->second.empty() || it->second.size() % 4 != 0) fail(DnsErrc::FormErr, "bad ipv4hint length");
        rec.ipv4hint.value = ByteReader(it->second).u32();
    }
    std::uint8_t proto = param(svc_param::kProtocol, "protocol", 1).u8();
    if (proto != static_cast<std::uint8_t>(L4Protocol::Udp) && proto != static_cast<std::uint8_t>(L4Protocol::Tcp))
        fail(DnsErrc::FormErr, "unknown protocol value");
    rec.protocol = static_cast<L4Protocol>(proto);
    rec.instance = param(svc_param::kInstance, "instance", 2).u16();
    rec.major = param(svc_param::kMajor, "major", 1).u8();
    rec.minor = param(svc_param::kMinor, "minor", 4).u32();
    if (rec.port == 0) fail(DnsErrc::FormErr, "port 0");
    return rec;
}

Bytes encode_svcb_rdata(const SvcbServiceRecord &rec) { return encode_svcb_rdata(to_svcb(rec)); }

SvcbServiceRecord decode_service_svcb(ByteView rdata) { return to_service_record(decode_svcb_rdata(rdata)); }

// --- TLSA -------------------------------------------------------------------

namespace {

void check_tlsa(const TlsaCertRecord &rec) {
    if (rec.usage != 3) fail(DnsErrc::UnsupportedUsage, "usage " + std::to_string(rec.usage));
    if (rec.selector != 0) fail(DnsErrc::UnsupportedSelector, "selector " + std::to_string(rec.selector));
    if (rec.matching_type != 0) fail(DnsErrc::UnsupportedMatching, "matching type " + std::to_string(rec.matching_type));
    if (rec.cert_data.empty()) fail(DnsErrc::FormErr, "empty certificate data");
}

}  // namespace

Bytes encode_tlsa_rdata(const TlsaCertRecord &rec) {
    check_tlsa(rec);
    ByteWriter w;
    w.u8(rec.usage);
    w.u8(rec.selector);
    w.u8(rec.matching_type);
    w.raw(rec.cert_data);
    return w.take();
}

TlsaCertRecord decode_tlsa_rdata(ByteView rdata) {
    if (rdata.size() < 3) fail(DnsErrc::Truncated, "TLSA RDATA shorter than 3 bytes");
    TlsaCertRecord rec;
    rec.usage = rdata[0];
    rec.selector = rdata[1];
    rec.matching_type = rdata[2];
    rec.cert_data.assign(rdata.begin() + 3, rdata.end());
    check_tlsa(rec);
    return rec;
}

DnsName tlsa_owner_name(const DnsName &service_name, std::uint16_t port, L4Protocol protocol) {
    return service_name.prepend("_" + to_string(protocol)).prepend("_" + std::to_string(port));
}

// --- DNSKEY / DS / RRSIG ----------------------------------------------------

Bytes encode_dnskey_rdata(const DnskeyRdata &rd) {
    ByteWriter w;
    w.u16(rd.flags);
    w.u8(rd.protocol);
    w.u8(rd.algorithm);
    w.raw(rd.public_key);
    return w.take();
}

DnskeyRdata decode_dnskey_rdata(ByteView rdata) {
    return guarded([&] {
        ByteReader r(rdata);
        DnskeyRdata rd;
        rd.flags = r.u16();
        rd.protocol = r.u8();
        rd.algorithm = r.u8();
        auto key = r.rest();
        if (key.empty()) fail(DnsErrc::FormErr, "empty public key");
        rd.public_key.assign(key.begin(), key.end());
        return rd;
    });
}

std::uint16_t compute_key_tag(ByteView rdata) {
    std::uint32_t ac = 0;
    for (std::size_t i = 0; i < rdata.size(); ++i) ac += (i & 1) ? rdata[i] : std::uint32_t{rdata[i]} << 8;
    ac += (ac >> 16) & 0xFFFF;
    return static_cast<std::uint16_t>(ac & 0xFFFF);
}

std::uint16_t DnskeyRdata::key_tag() const { return compute_key_tag(encode_dnskey_rdata(*this)); }

Bytes encode_ds_rdata(const DsRdata &rd) {
    ByteWriter w;
    w.u16(rd.key_tag);
    w.u8(rd.algorithm);
    w.u8(rd.digest_type);
    w.raw(rd.digest);
    return w.take();
}

DsRdata decode_ds_rdata(ByteView rdata) {
    return guarded([&] {
        ByteReader r(rdata);
        DsRdata rd;
        rd.key_tag = r.u16();
        rd.algorithm = r.u8();
        rd.digest_type = r.u8();
        auto d = r.rest();
        if (d.empty()) fail(DnsErrc::FormErr, "empty DS digest");
        rd.digest.assign(d.begin(), d.end());
        return rd;
    });
}

std::string ds_to_text(const DnsName &zone, const DsRdata &ds) {
    std::ostringstream os;
    os << zone.to_string() << ' ' << ds.key_tag << ' ' << unsigned{ds.algorithm} << ' ' << unsigned{ds.digest_type}
       << ' ' << to_hex(ds.digest);
    return os.str();
}

std::pair<DnsName, DsRdata> ds_from_text(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string zone, hex;
    unsigned tag = 0, alg = 0, dt = 0;
    if (!(is >> zone >> tag >> alg >> dt >> hex) || tag > 0xFFFF || alg > 0xFF || dt > 0xFF)
        throw std::invalid_argument("DS text must be '<zone> <tag> <alg> <digest-type> <hex>'");
    std::string extra;
    if (is >> extra) throw std::invalid_argument("trailing text after DS digest");
    DsRdata ds;
    ds.key_tag = static_cast<std::uint16_t>(tag);
    ds.algorithm = static_cast<std::uint8_t>(alg);
    ds.digest_type = static_cast<std::uint8_t>(dt);
    ds.digest = from_hex(hex);
    return {DnsName::parse(zone), ds};
}

Bytes RrsigRdata::signed_prefix() const {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(type_covered));
    w.u8(algorithm);
    w.u8(labels);
    w.u32(original_ttl);
    w.u32(expiration);
    w.u32(inception);
    w.u16(key_tag);
    w.raw(signer.canonical_wire());
    return w.take();
}

Bytes encode_rrsig_rdata(const RrsigRdata &rd) {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(rd.type_covered));
    w.u8(rd.algorithm);
    w.u8(rd.labels);
    w.u32(rd.original_ttl);
    w.u32(rd.expiration);
    w.u32(rd.inception);
    w.u16(rd.key_tag);
    write_name(w, rd.signer);
    w.raw(rd.signature);
    return w.take();
}

RrsigRdata decode_rrsig_rdata(ByteView rdata) {
    return guarded([&] {
        ByteReader r(rdata);
        RrsigRdata rd;
        rd.type_covered = static_cast<RRType>(r.u16());
        rd.algorithm = r.u8();
        rd.labels = r.u8();
        rd.original_ttl = r.u32();
        rd.expiration = r.u32();
        rd.inception = r.u32();
        rd.key_tag = r.u16();
        rd.signer = read_name(r);
        auto sig = r.rest();
        if (sig.empty()) fail(DnsErrc::FormErr, "empty signature");
        rd.signature.assign(sig.begin(), sig.end());
        return rd;
    });
}

// --- messages ---------------------------------------------------------------

std::string to_string(Rcode r) {
    switch (r) {
    case Rcode::NoError: return "NOERROR";
    case Rcode::FormErr: return "FORMERR";
    case Rcode::ServFail: return "SERVFAIL";
    case Rcode::NxDomain: return "NXDOMAIN";
    case Rcode::NotImp: return "NOTIMP";
    case Rcode::Refused: return "REFUSED";
    }
    return "RCODE" + std::to_string(static_cast<unsigned>(r));
}

namespace {

void write_record(ByteWriter &w, const DnsRecord &rr) {
    if (rr.rdata.size() > 0xFFFF) fail(DnsErrc::FormErr, "RDATA longer than 65535 bytes");
    write_name(w, rr.owner);
    w.u16(static_cast<std::uint16_t>(rr.type));
    w.u16(rr.rrclass);
    w.u32(rr.ttl);
    w.u16(static_cast<std::uint16_t>(rr.rdata.size()));
    w.raw(rr.rdata);
}

DnsRecord read_record(ByteReader &r) {
    DnsRecord rr;
    rr.owner = read_compressed_name(r);
    rr.type = static_cast<RRType>(r.u16());
    rr.rrclass = r.u16();
    rr.ttl = r.u32();
    std::uint16_t len = r.u16();
    auto rdata = r.take(len);
    rr.rdata.assign(rdata.begin(), rdata.end());
    return rr;
}

}  // namespace

Bytes encode_dns_message(const DnsMessage &m) {
    ByteWriter w;
    w.u16(m.id);
    std::uint16_t flags = 0;
    if (m.qr) flags |= 0x8000;
    flags |= static_cast<std::uint16_t>((m.opcode & 0x0F) << 11);
    if (m.aa) flags |= 0x0400;
    if (m.tc) flags |= 0x0200;
    if (m.rd) flags |= 0x0100;
    if (m.ra) flags |= 0x0080;
    if (m.ad) flags |= 0x0020;
    if (m.cd) flags |= 0x0010;
    flags |= static_cast<std::uint16_t>(m.rcode) & 0x0F;
    w.u16(flags);
    w.u16(static_cast<std::uint16_t>(m.questions.size()));
    w.u16(static_cast<std::uint16_t>(m.answers.size()));
    w.u16(static_cast<std::uint16_t>(m.authority.size()));
    w.u16(static_cast<std::uint16_t>(m.additional.size() + (m.edns ? 1 : 0)));
    for (const auto &q : m.questions) {
        write_name(w, q.name);
        w.u16(static_cast<std::uint16_t>(q.type));
        w.u16(q.qclass);
    }
    for (const auto &rr : m.answers) write_record(w, rr);
    for (const auto &rr : m.authority) write_record(w, rr);
    for (const auto &rr : m.additional) write_record(w, rr);
    if (m.edns) {
        w.u8(0);  // root owner
        w.u16(static_cast<std::uint16_t>(RRType::OPT));
        w.u16(m.udp_payload_size);
        w.u32(m.dnssec_ok ? 0x00008000u : 0u);
        w.u16(0);
    }
    return w.take();
}

DnsMessage decode_dns_message(ByteView buf) {
    return guarded([&] {
        if (buf.size() < 12) fail(DnsErrc::Truncated, "shorter than DNS header");
        ByteReader r(buf);
        DnsMessage m;
        m.id = r.u16();
        std::uint16_t flags = r.u16();
        m.qr = flags & 0x8000;
        m.opcode = static_cast<std::uint8_t>((flags >> 11) & 0x0F);
        m.aa = flags & 0x0400;
        m.tc = flags & 0x0200;
        m.rd = flags & 0x0100;
        m.ra = flags & 0x0080;
        m.ad = flags & 0x0020;
        m.cd = flags & 0x0010;
        m.rcode = static_cast<Rcode>(flags & 0x0F);
        std::uint16_t qd = r.u16(), an = r.u16(), ns = r.u16(), ar = r.u16();
        for (unsigned i = 0; i < qd; ++i) {
            DnsQuestion q;
            q.name = read_compressed_name(r);
            q.type = static_cast<RRType>(r.u16());
            q.qclass = r.u16();
            m.questions.push_back(std::move(q));
        }
        for (unsigned i = 0; i < an; ++i) m.answers.push_back(read_record(r));
        for (unsigned i = 0; i < ns; ++i) m.authority.push_back(read_record(r));
        for (unsigned i = 0; i < ar; ++i) {
            auto rr = read_record(r);
            if (rr.type == RRType::OPT) {
                if (m.edns) fail(DnsErrc::FormErr, "more than one OPT record");
                if (!rr.owner.is_root()) fail(DnsErrc::FormErr, "OPT owner is not root");
                m.edns = true;
                m.udp_payload_size = rr.rrclass;
                m.dnssec_ok = rr.ttl & 0x8000;
                continue;
            }
            m.additional.push_back(std::move(rr));
        }
        if (!r.empty()) fail(DnsErrc::FormErr, "trailing bytes after message");
        return m;
    });
}

Bytes encode_dns_query(const DnsName &name, RRType type, std::uint16_t id) {
    DnsMessage m;
    m.id = id;
    m.rd = true;
    m.questions.push_back({name, type, kClassIN});
    m.edns = true;
    m.dnssec_ok = true;
    m.udp_payload_size = kEdnsUdpSize;
    return encode_dns_message(m);
}

std::vector<SignedRRset> group_rrsets(const std::vector<DnsRecord> &records) {
    std::vector<SignedRRset> sets;
    auto find_set = [&](const DnsName &owner, RRType type) -> SignedRRset * {
        for (auto &s : sets)
            if (s.rrset.owner == owner && s.rrset.type == type) return &s;
        return nullptr;
    };
    for (const auto &rr : records) {
        if (rr.type == RRType::RRSIG) continue;
        auto *s = find_set(rr.owner, rr.type);
        if (!s) {
            sets.push_back({});
            s = &sets.back();
            s->rrset.owner = rr.owner;
            s->rrset.type = rr.type;
            s->rrset.rrclass = rr.rrclass;
            s->rrset.ttl = rr.ttl;
        }
        s->rrset.ttl = std::min(s->rrset.ttl, rr.ttl);
        s->rrset.rdatas.push_back(rr.rdata);
    }
    for (const auto &rr : records) {
        if (rr.type != RRType::RRSIG) continue;
        if (rr.rdata.size() < 2) fail(DnsErrc::FormErr, "RRSIG RDATA too short");
        auto covered = static_cast<RRType>((rr.rdata[0] << 8) | rr.rdata[1]);
        if (auto *s = find_set(rr.owner, covered)) s->rrsigs.push_back(rr.rdata);
    }
    for (auto &s : sets) s.rrset.canonicalize();
    return sets;
}

void append_records(std::vector<DnsRecord> &out, const SignedRRset &set) {
    const auto &rs = set.rrset;
    for (const auto &rd : rs.rdatas) out.push_back({rs.owner, rs.type, rs.rrclass, rs.ttl, rd});
    for (const auto &sig : set.rrsigs) out.push_back({rs.owner, RRType::RRSIG, rs.rrclass, rs.ttl, sig});
}

DnsResponse decode_dns_response(ByteView buf, std::uint16_t id) {
    DnsMessage m = decode_dns_message(buf);
    if (m.id != id) fail(DnsErrc::IdMismatch, "response id " + std::to_string(m.id));
    if (!m.qr) fail(DnsErrc::FormErr, "message is not a response");
    DnsResponse resp;
    resp.rcode = m.rcode;
    resp.authenticated = m.ad;
    resp.rrsets = group_rrsets(m.answers);
    return resp;
}

}  // namespace sdsec
