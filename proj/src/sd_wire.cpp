#include "sdsec/sd_wire.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sdsec {

namespace {

constexpr std::uint32_t kSdMessageId = 0xFFFF8100;
constexpr std::uint8_t kProtocolVersion = 0x01;
constexpr std::uint8_t kInterfaceVersion = 0x01;
constexpr std::uint8_t kTypeNotification = 0x02;
constexpr std::size_t kSomeIpHeaderSize = 16;
constexpr std::size_t kEntrySize = 16;

constexpr std::uint8_t kFlagReboot = 0x80;
constexpr std::uint8_t kFlagUnicast = 0x40;

constexpr std::uint8_t kOptionConfiguration = 0x01;
constexpr std::uint8_t kOptionIpv4Endpoint = 0x04;
constexpr std::uint16_t kIpv4EndpointLength = 9;

constexpr std::size_t kMaxOptions = 255;
constexpr std::size_t kMaxItemLength = 255;
constexpr std::uint8_t kMaxRunCount = 15;

[[noreturn]] void fail(WireErrc code, const std::string &what) { throw WireError(code, what); }

bool is_valid_key(std::string_view key) {
    if (key.empty()) return false;
    return std::all_of(key.begin(), key.end(), [](char c) { return c >= 0x20 && c <= 0x7e && c != '='; });
}

void check_entry(const SdEntry &e, const std::vector<SdOption> &options) {
    if (e.ttl_seconds > kMaxTtl) fail(WireErrc::InvalidEntry, "ttl exceeds 24 bits");
    if (e.service.instance_id == kAnyInstance || e.service.major_version == kAnyMajor ||
        e.service.minor_version == kAnyMinor)
        fail(WireErrc::InvalidEntry, "concrete field equals its wildcard encoding");
    if (e.is_eventgroup_entry() && e.service.minor_version)
        fail(WireErrc::InvalidEntry, "eventgroup entries carry no minor version");
    if (!e.is_eventgroup_entry() && e.eventgroup_id != 0)
        fail(WireErrc::InvalidEntry, "eventgroup id on a service entry");

    std::size_t endpoints = 0;
    for (const auto &run : {e.first_run, e.second_run}) {
        if (run.count > kMaxRunCount) fail(WireErrc::InvalidEntry, "option run longer than 15");
        if (run.count == 0 && run.index != 0) fail(WireErrc::InvalidEntry, "empty option run with nonzero index");
        if (std::size_t{run.index} + run.count > options.size())
            fail(WireErrc::DanglingOptionRef, "entry references option beyond array");
        for (std::size_t i = run.index; i < std::size_t{run.index} + run.count; ++i)
            if (std::holds_alternative<EndpointInfo>(options[i])) ++endpoints;
    }
    switch (e.type) {
    case EntryType::Find:
        if (endpoints != 0) fail(WireErrc::InvalidEntry, "find references an endpoint option");
        break;
    case EntryType::Offer:
    case EntryType::Subscribe:
        if (endpoints == 0) fail(WireErrc::InvalidEntry, "offer/subscribe without endpoint option");
        break;
    case EntryType::SubscribeAck:
        break;
    }
}

void check_endpoint(const EndpointInfo &ep) {
    if (ep.port == 0) fail(WireErrc::Malformed, "endpoint port 0");
    if (ep.protocol != L4Protocol::Udp && ep.protocol != L4Protocol::Tcp)
        fail(WireErrc::Malformed, "unknown L4 protocol");
}

void encode_option(ByteWriter &w, const SdOption &opt) {
    if (const auto *ep = std::get_if<EndpointInfo>(&opt)) {
        check_endpoint(*ep);
        w.u16(kIpv4EndpointLength);
        w.u8(kOptionIpv4Endpoint);
        w.u8(0);
        w.u32(ep->ip.value);
        w.u8(0);
        w.u8(static_cast<std::uint8_t>(ep->protocol));
        w.u16(ep->port);
        return;
    }
    const auto &cfg = std::get<ConfigOption>(opt);
    std::size_t at = w.reserve16();
    std::size_t start = w.size();
    w.u8(kOptionConfiguration);
    w.u8(0);
    std::vector<std::string_view> seen;
    for (const auto &item : cfg.items) {
        if (!is_valid_key(item.key)) fail(WireErrc::Malformed, "invalid configuration key");
        if (std::find(seen.begin(), seen.end(), item.key) != seen.end())
            fail(WireErrc::Malformed, "duplicate configuration key '" + item.key + "'");
        seen.push_back(item.key);
        std::size_t len = item.key.size() + 1 + item.value.size();
        if (len > kMaxItemLength) fail(WireErrc::OversizedOption, "configuration item exceeds 255 bytes");
        w.u8(static_cast<std::uint8_t>(len));
        w.raw(item.key);
        w.u8('=');
        w.raw(item.value);
    }
    w.u8(0);
    std::size_t length = w.size() - start - 1;  // excludes the type byte
    if (length > 0xFFFF) fail(WireErrc::OversizedOption, "configuration option exceeds 64 KiB");
    w.patch16(at, static_cast<std::uint16_t>(length));
}

SdOption decode_option(ByteReader &r) {
    std::uint16_t length = r.u16();
    std::uint8_t type = r.u8();
    if (length < 1) fail(WireErrc::Malformed, "option length 0");
    ByteReader body(r.take(length));
    if (body.u8() != 0) fail(WireErrc::Malformed, "option reserved byte");
    switch (type) {
    case kOptionIpv4Endpoint: {
        if (length != kIpv4EndpointLength) fail(WireErrc::Malformed, "ipv4 endpoint option length");
        EndpointInfo ep;
        ep.ip.value = body.u32();
        if (body.u8() != 0) fail(WireErrc::Malformed, "endpoint reserved byte");
        std::uint8_t proto = body.u8();
        if (proto != static_cast<std::uint8_t>(L4Protocol::Udp) && proto != static_cast<std::uint8_t>(L4Protocol::Tcp))
            fail(WireErrc::Malformed, "unknown L4 protocol");
        ep.protocol = static_cast<L4Protocol>(proto);
        ep.port = body.u16();
        check_endpoint(ep);
        return ep;
    }
    case kOptionConfiguration: {
        ConfigOption cfg;
        for (;;) {
            std::uint8_t len = body.u8();
            if (len == 0) break;
            auto item = body.take(len);
            auto eq = std::find(item.begin(), item.end(), std::uint8_t{'='});
            if (eq == item.end()) fail(WireErrc::Malformed, "configuration item without '='");
            std::string key(item.begin(), eq);
            if (!is_valid_key(key)) fail(WireErrc::Malformed, "invalid configuration key");
            if (cfg.find(key)) fail(WireErrc::Malformed, "duplicate configuration key '" + key + "'");
            cfg.items.push_back({std::move(key), Bytes(eq + 1, item.end())});
        }
        if (!body.empty()) fail(WireErrc::Malformed, "bytes after configuration terminator");
        return cfg;
    }
    default:
        fail(WireErrc::UnknownOptionType, "option type " + std::to_string(type));
    }
}

void encode_someip_header(ByteWriter &w, std::uint32_t message_id, std::uint16_t session, std::size_t payload) {
    w.u32(message_id);
    w.u32(static_cast<std::uint32_t>(8 + payload));
    w.u16(0);
    w.u16(session);
    w.u8(kProtocolVersion);
    w.u8(kInterfaceVersion);
    w.u8(kTypeNotification);
    w.u8(0);
}

struct SomeIpHeader {
    std::uint32_t message_id;
    std::uint16_t session_id;
};

// Validates the fixed header fields and that the declared length matches the buffer.
SomeIpHeader decode_someip_header(ByteReader &r) {
    SomeIpHeader h{};
    h.message_id = r.u32();
    std::uint32_t length = r.u32();
    if (r.u16() != 0) fail(WireErrc::Malformed, "client id");
    h.session_id = r.u16();
    if (r.u8() != kProtocolVersion) fail(WireErrc::Malformed, "protocol version");
    if (r.u8() != kInterfaceVersion) fail(WireErrc::Malformed, "interface version");
    if (r.u8() != kTypeNotification) fail(WireErrc::Malformed, "message type");
    if (r.u8() != 0) fail(WireErrc::Malformed, "return code");
    if (length < 8) fail(WireErrc::Malformed, "length field below header size");
    std::size_t payload = length - 8;
    if (r.remaining() < payload) fail(WireErrc::Truncated, "payload shorter than length field");
    if (r.remaining() > payload) fail(WireErrc::Malformed, "trailing bytes after message");
    return h;
}

}  // namespace

bool ServiceDescription::matches(const ServiceDescription &other) const {
    if (service_id != other.service_id) return false;
    if (instance_id && instance_id != other.instance_id) return false;
    if (major_version && major_version != other.major_version) return false;
    if (minor_version && minor_version != other.minor_version) return false;
    return true;
}

std::string to_string(const ServiceDescription &d) {
    char buf[96];
    auto field = [](auto opt, const char *fmt) {
        if (!opt) return std::string("*");
        char b[16];
        std::snprintf(b, sizeof b, fmt, static_cast<unsigned>(*opt));
        return std::string(b);
    };
    std::snprintf(buf, sizeof buf, "service=0x%04x instance=%s major=%s minor=%s",
                  static_cast<unsigned>(d.service_id), field(d.instance_id, "0x%04x").c_str(),
                  field(d.major_version, "0x%02x").c_str(), field(d.minor_version, "0x%08x").c_str());
    return buf;
}

Ipv4Address Ipv4Address::parse(const std::string &dotted) {
    unsigned a, b, c, d;
    char tail;
    if (std::sscanf(dotted.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4 || a > 255 || b > 255 ||
        c > 255 || d > 255)
        throw std::invalid_argument("invalid IPv4 address '" + dotted + "'");
    return Ipv4Address{(a << 24) | (b << 16) | (c << 8) | d};
}

std::string Ipv4Address::to_string() const {
    auto o = octets();
    return std::to_string(o[0]) + "." + std::to_string(o[1]) + "." + std::to_string(o[2]) + "." +
           std::to_string(o[3]);
}

std::string to_string(L4Protocol p) { return p == L4Protocol::Udp ? "udp" : "tcp"; }

L4Protocol parse_l4_protocol(const std::string &text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "udp") return L4Protocol::Udp;
    if (t == "tcp") return L4Protocol::Tcp;
    throw std::invalid_argument("unknown protocol '" + text + "'");
}

std::string to_string(const EndpointInfo &ep) {
    return ep.ip.to_string() + ":" + std::to_string(ep.port) + "/" + to_string(ep.protocol);
}

const Bytes *ConfigOption::find(std::string_view key) const {
    for (const auto &item : items)
        if (item.key == key) return &item.value;
    return nullptr;
}

void ConfigOption::set(std::string key, Bytes value) {
    for (auto &item : items) {
        if (item.key == key) {
            item.value = std::move(value);
            return;
        }
    }
    items.push_back({std::move(key), std::move(value)});
}

std::string to_string(EntryType t) {
    switch (t) {
    case EntryType::Find: return "Find";
    case EntryType::Offer: return "Offer";
    case EntryType::Subscribe: return "Subscribe";
    case EntryType::SubscribeAck: return "SubscribeAck";
    }
    return "?";
}

std::string to_string(WireErrc code) {
    switch (code) {
    case WireErrc::Truncated: return "Truncated";
    case WireErrc::UnknownEntryType: return "UnknownEntryType";
    case WireErrc::UnknownOptionType: return "UnknownOptionType";
    case WireErrc::DanglingOptionRef: return "DanglingOptionRef";
    case WireErrc::OversizedOption: return "OversizedOption";
    case WireErrc::TooManyOptions: return "TooManyOptions";
    case WireErrc::InvalidEntry: return "InvalidEntry";
    case WireErrc::Malformed: return "Malformed";
    }
    return "?";
}

std::uint8_t SdMessage::add_option(SdOption option) {
    if (options.size() >= kMaxOptions) fail(WireErrc::TooManyOptions, "more than 255 options");
    options.push_back(std::move(option));
    return static_cast<std::uint8_t>(options.size() - 1);
}

std::vector<const SdOption *> SdMessage::options_of(const SdEntry &entry) const {
    std::vector<const SdOption *> out;
    for (const auto &run : {entry.first_run, entry.second_run}) {
        if (std::size_t{run.index} + run.count > options.size())
            fail(WireErrc::DanglingOptionRef, "entry references option beyond array");
        for (std::size_t i = run.index; i < std::size_t{run.index} + run.count; ++i) out.push_back(&options[i]);
    }
    return out;
}

Bytes encode_sd_message(const SdMessage &msg) {
    if (msg.options.size() > kMaxOptions) fail(WireErrc::TooManyOptions, "more than 255 options");
    for (const auto &e : msg.entries) check_entry(e, msg.options);

    ByteWriter payload;
    payload.u8(static_cast<std::uint8_t>((msg.reboot_flag ? kFlagReboot : 0) | (msg.unicast_flag ? kFlagUnicast : 0)));
    payload.u24(0);
    payload.u32(static_cast<std::uint32_t>(msg.entries.size() * kEntrySize));
    for (const auto &e : msg.entries) {
        payload.u8(static_cast<std::uint8_t>(e.type));
        payload.u8(e.first_run.index);
        payload.u8(e.second_run.index);
        payload.u8(static_cast<std::uint8_t>((e.first_run.count << 4) | e.second_run.count));
        payload.u16(e.service.service_id);
        payload.u16(e.service.instance_id.value_or(kAnyInstance));
        payload.u8(e.service.major_version.value_or(kAnyMajor));
        payload.u24(e.ttl_seconds);
        if (e.is_eventgroup_entry()) {
            payload.u16(0);
            payload.u16(e.eventgroup_id);
        } else {
            payload.u32(e.service.minor_version.value_or(kAnyMinor));
        }
    }
    std::size_t at = payload.reserve32();
    std::size_t start = payload.size();
    for (const auto &opt : msg.options) encode_option(payload, opt);
    payload.patch32(at, static_cast<std::uint32_t>(payload.size() - start));

    Bytes body = payload.take();
    ByteWriter out;
    encode_someip_header(out, kSdMessageId, msg.session_id, body.size());
    out.raw(body);
    return out.take();
}

SdMessage decode_sd_message(ByteView buf) {
    try {
        ByteReader r(buf);
        if (buf.size() < kSomeIpHeaderSize) fail(WireErrc::Truncated, "shorter than SOME/IP header");
        SomeIpHeader h = decode_someip_header(r);
        if (h.message_id != kSdMessageId) fail(WireErrc::Malformed, "not an SD message id");

        SdMessage msg;
        msg.session_id = h.session_id;
        std::uint8_t flags = r.u8();
        if (flags & ~(kFlagReboot | kFlagUnicast)) fail(WireErrc::Malformed, "reserved flag bits set");
        msg.reboot_flag = flags & kFlagReboot;
        msg.unicast_flag = flags & kFlagUnicast;
        if (r.u24() != 0) fail(WireErrc::Malformed, "reserved header bytes");

        std::uint32_t entries_len = r.u32();
        if (entries_len > r.remaining()) fail(WireErrc::Truncated, "entries array");
        if (entries_len % kEntrySize != 0) fail(WireErrc::Malformed, "entries length not a multiple of 16");
        ByteReader entries(r.take(entries_len));
        while (!entries.empty()) {
            SdEntry e;
            std::uint8_t type = entries.u8();
            switch (type) {
            case 0x00: case 0x01: case 0x06: case 0x07: e.type = static_cast<EntryType>(type); break;
            default: fail(WireErrc::UnknownEntryType, "entry type " + std::to_string(type));
            }
            e.first_run.index = entries.u8();
            e.second_run.index = entries.u8();
            std::uint8_t counts = entries.u8();
            e.first_run.count = counts >> 4;
            e.second_run.count = counts & 0x0f;
            e.service.service_id = entries.u16();
            if (auto v = entries.u16(); v != kAnyInstance) e.service.instance_id = v;
            if (auto v = entries.u8(); v != kAnyMajor) e.service.major_version = v;
            e.ttl_seconds = entries.u24();
            if (e.is_eventgroup_entry()) {
                if (entries.u16() != 0) fail(WireErrc::Malformed, "eventgroup entry reserved bits");
                e.eventgroup_id = entries.u16();
            } else if (auto v = entries.u32(); v != kAnyMinor) {
                e.service.minor_version = v;
            }
            msg.entries.push_back(e);
        }

        std::uint32_t options_len = r.u32();
        if (options_len > r.remaining()) fail(WireErrc::Truncated, "options array");
        if (options_len < r.remaining()) fail(WireErrc::Malformed, "bytes after options array");
        ByteReader options(r.take(options_len));
        while (!options.empty()) {
            if (msg.options.size() >= kMaxOptions) fail(WireErrc::TooManyOptions, "more than 255 options");
            msg.options.push_back(decode_option(options));
        }
        for (const auto &e : msg.entries) check_entry(e, msg.options);
        return msg;
    } catch (const ShortBuffer &) {
        fail(WireErrc::Truncated, "unexpected end of buffer");
    }
}

bool is_sd_message(ByteView buf) {
    return buf.size() >= 4 && ByteReader(buf).u32() == kSdMessageId;
}

Bytes encode_notification(const Notification &n) {
    ByteWriter w;
    encode_someip_header(w, (std::uint32_t{n.service_id} << 16) | n.event_id, n.session_id, n.payload.size());
    w.raw(n.payload);
    return w.take();
}

Notification decode_notification(ByteView buf) {
    try {
        if (buf.size() < kSomeIpHeaderSize) fail(WireErrc::Truncated, "shorter than SOME/IP header");
        ByteReader r(buf);
        SomeIpHeader h = decode_someip_header(r);
        if (h.message_id == kSdMessageId) fail(WireErrc::Malformed, "SD message is not a notification");
        if ((h.message_id & 0x8000) == 0) fail(WireErrc::Malformed, "method id is not an event id");
        Notification n;
        n.service_id = static_cast<std::uint16_t>(h.message_id >> 16);
        n.event_id = static_cast<std::uint16_t>(h.message_id);
        n.session_id = h.session_id;
        auto rest = r.rest();
        n.payload.assign(rest.begin(), rest.end());
        return n;
    } catch (const ShortBuffer &) {
        fail(WireErrc::Truncated, "unexpected end of buffer");
    }
}

SessionCounter::Value SessionCounter::next() {
    if (last_ == 0xFFFF) {
        last_ = 1;
        wrapped_ = true;
    } else {
        ++last_;
    }
    return {last_, !wrapped_};
}

}  // namespace sdsec
