#pragma once

// SOME/IP-SD message model and its byte-exact codec.
//
// PDU layout (big-endian throughout):
//
//   SOME/IP header (16 bytes)
//     message id 0xFFFF8100 | length | client id 0x0000 | session id
//     protocol 0x01 | interface 0x01 | type 0x02 | return code 0x00
//   SD header
//     flags (1) | reserved (3) | entries length (4) | entries | options length (4) | options
//   entry (16 bytes)
//     type | idx1 | idx2 | #opt1<<4 | #opt2 | service (2) | instance (2) | major (1) | ttl (3)
//     minor (4)                         for Find / Offer
//     reserved (2) | eventgroup (2)     for Subscribe / SubscribeAck
//   option
//     length (2) | type (1) | reserved (1) | body       (length counts reserved + body)

#include "sdsec/bytes.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sdsec {

inline constexpr std::uint16_t kAnyInstance = 0xFFFF;
inline constexpr std::uint8_t kAnyMajor = 0xFF;
inline constexpr std::uint32_t kAnyMinor = 0xFFFFFFFF;
inline constexpr std::uint32_t kMaxTtl = 0xFFFFFF;

/// Find/offer service description. Unset optionals are wildcards; the concrete value
/// equal to a field's wildcard encoding is not representable.
struct ServiceDescription {
    std::uint16_t service_id = 0;
    std::optional<std::uint16_t> instance_id;
    std::optional<std::uint8_t> major_version;
    std::optional<std::uint32_t> minor_version;

    [[nodiscard]] bool is_concrete() const {
        return instance_id && major_version && minor_version;
    }
    /// True when every field this description sets equals the corresponding field of `other`.
    [[nodiscard]] bool matches(const ServiceDescription &other) const;

    friend bool operator==(const ServiceDescription &, const ServiceDescription &) = default;
};

std::string to_string(const ServiceDescription &desc);

struct Ipv4Address {
    std::uint32_t value = 0;

    static Ipv4Address parse(const std::string &dotted);  // throws std::invalid_argument
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] std::array<std::uint8_t, 4> octets() const {
        return {static_cast<std::uint8_t>(value >> 24), static_cast<std::uint8_t>(value >> 16),
                static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
    }

    friend auto operator<=>(const Ipv4Address &, const Ipv4Address &) = default;
};

enum class L4Protocol : std::uint8_t { Tcp = 0x06, Udp = 0x11 };

std::string to_string(L4Protocol p);  // "udp" / "tcp"
L4Protocol parse_l4_protocol(const std::string &text);

struct EndpointInfo {
    Ipv4Address ip;
    L4Protocol protocol = L4Protocol::Udp;
    std::uint16_t port = 0;

    friend auto operator<=>(const EndpointInfo &, const EndpointInfo &) = default;
};

std::string to_string(const EndpointInfo &ep);

/// Ordered key/value items of a configuration option.
struct ConfigOption {
    struct Item {
        std::string key;
        Bytes value;
        friend bool operator==(const Item &, const Item &) = default;
    };
    std::vector<Item> items;

    [[nodiscard]] const Bytes *find(std::string_view key) const;
    void set(std::string key, Bytes value);

    friend bool operator==(const ConfigOption &, const ConfigOption &) = default;
};

using SdOption = std::variant<EndpointInfo, ConfigOption>;

enum class EntryType : std::uint8_t {
    Find = 0x00,
    Offer = 0x01,
    Subscribe = 0x06,
    SubscribeAck = 0x07,
};

std::string to_string(EntryType t);

/// A contiguous run of option indices; count is limited to 4 bits on the wire.
struct OptionRun {
    std::uint8_t index = 0;
    std::uint8_t count = 0;
    friend bool operator==(const OptionRun &, const OptionRun &) = default;
};

struct SdEntry {
    EntryType type = EntryType::Find;
    ServiceDescription service;
    std::uint16_t eventgroup_id = 0;  // Subscribe / SubscribeAck only
    std::uint32_t ttl_seconds = 0;
    OptionRun first_run;
    OptionRun second_run;

    [[nodiscard]] bool is_eventgroup_entry() const {
        return type == EntryType::Subscribe || type == EntryType::SubscribeAck;
    }

    friend bool operator==(const SdEntry &, const SdEntry &) = default;
};

struct SdMessage {
    std::uint16_t session_id = 1;
    bool reboot_flag = false;
    bool unicast_flag = true;
    std::vector<SdEntry> entries;
    std::vector<SdOption> options;

    /// Appends an option and returns its index.
    std::uint8_t add_option(SdOption option);
    /// Options referenced by `entry`, in run order. Throws on dangling references.
    [[nodiscard]] std::vector<const SdOption *> options_of(const SdEntry &entry) const;

    friend bool operator==(const SdMessage &, const SdMessage &) = default;
};

enum class WireErrc {
    Truncated,
    UnknownEntryType,
    UnknownOptionType,
    DanglingOptionRef,
    OversizedOption,
    TooManyOptions,
    InvalidEntry,
    Malformed,
};

std::string to_string(WireErrc code);

class WireError : public std::runtime_error {
public:
    WireError(WireErrc code, const std::string &what)
        : std::runtime_error(to_string(code) + ": " + what), code_(code) {}
    [[nodiscard]] WireErrc code() const { return code_; }

private:
    WireErrc code_;
};

Bytes encode_sd_message(const SdMessage &msg);
SdMessage decode_sd_message(ByteView buf);

/// True when `buf` carries the SOME/IP-SD message id.
bool is_sd_message(ByteView buf);

/// Event notification: a SOME/IP header with an opaque payload.
struct Notification {
    std::uint16_t service_id = 0;
    std::uint16_t event_id = 0x8001;
    std::uint16_t session_id = 1;
    Bytes payload;
    friend bool operator==(const Notification &, const Notification &) = default;
};

Bytes encode_notification(const Notification &n);
Notification decode_notification(ByteView buf);

/// Per-sender SD session counter: 1..0xFFFF, wrapping to 1; the reboot flag stays set
/// until the first wrap.
class SessionCounter {
public:
    struct Value {
        std::uint16_t session_id;
        bool reboot_flag;
    };
    Value next();

private:
    std::uint16_t last_ = 0;
    bool wrapped_ = false;
};

}  // namespace sdsec
