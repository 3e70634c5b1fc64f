#include "sdsec/service_namespace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace sdsec {

namespace {

constexpr std::string_view kRootLabel = "_someip";

enum class Field { Minor = 0, Major = 1, Instance = 2, Id = 3 };

struct FieldSpec {
    Field field;
    std::string_view prefix;
    std::size_t hex_width;
};

// Canonical left-to-right order.
constexpr std::array<FieldSpec, 4> kFields{{
    {Field::Minor, "minor0x", 8},
    {Field::Major, "major0x", 2},
    {Field::Instance, "instance0x", 4},
    {Field::Id, "id0x", 4},
}};

[[noreturn]] void fail(NamespaceErrc code, const std::string &what) { throw NamespaceError(code, what); }

std::string field_label(const FieldSpec &spec, std::uint32_t value) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%0*x", static_cast<int>(spec.hex_width), value);
    return std::string(spec.prefix) + buf;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

const FieldSpec *classify(const std::string &label) {
    for (const auto &spec : kFields)
        if (label.starts_with(spec.prefix)) return &spec;
    return nullptr;
}

std::uint32_t parse_value(const FieldSpec &spec, const std::string &label) {
    auto digits = std::string_view(label).substr(spec.prefix.size());
    if (digits.size() != spec.hex_width) fail(NamespaceErrc::MalformedLabel, "wrong hex width in '" + label + "'");
    std::uint32_t v = 0;
    for (char c : digits) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else fail(NamespaceErrc::MalformedLabel, "non-hex digit in '" + label + "'");
        v = (v << 4) | static_cast<std::uint32_t>(d);
    }
    return v;
}

void check_combination(const ServiceDescription &d) {
    if (d.minor_version && !d.major_version)
        fail(NamespaceErrc::InvalidCombination, "minor version without major version");
}

}  // namespace

std::string to_string(NamespaceErrc code) {
    switch (code) {
    case NamespaceErrc::InvalidCombination: return "InvalidCombination";
    case NamespaceErrc::MalformedLabel: return "MalformedLabel";
    case NamespaceErrc::WrongOrder: return "WrongOrder";
    case NamespaceErrc::WrongParent: return "WrongParent";
    }
    return "?";
}

DnsName ServiceQueryName::to_dns_name() const {
    std::vector<std::string> all = labels;
    all.insert(all.end(), parent.labels().begin(), parent.labels().end());
    return DnsName::from_labels(std::move(all));
}

ServiceQueryName to_query_name(const ServiceDescription &desc, const DnsName &parent) {
    check_combination(desc);
    if (desc.instance_id == kAnyInstance || desc.major_version == kAnyMajor || desc.minor_version == kAnyMinor)
        fail(NamespaceErrc::MalformedLabel, "concrete field equals its wildcard value");
    ServiceQueryName q;
    q.parent = parent.lowercase();
    q.labels.emplace_back(kRootLabel);
    if (desc.minor_version) q.labels.push_back(field_label(kFields[0], *desc.minor_version));
    if (desc.major_version) q.labels.push_back(field_label(kFields[1], *desc.major_version));
    if (desc.instance_id) q.labels.push_back(field_label(kFields[2], *desc.instance_id));
    q.labels.push_back(field_label(kFields[3], desc.service_id));
    return q;
}

ServiceDescription from_query_name(const DnsName &name) {
    const auto &labels = name.labels();
    if (labels.empty() || lower(labels[0]) != kRootLabel)
        fail(NamespaceErrc::MalformedLabel, "name does not start with _someip");

    ServiceDescription d;
    int last_rank = -1;
    bool have_id = false;
    std::size_t i = 1;
    for (; i < labels.size() && !have_id; ++i) {
        std::string label = lower(labels[i]);
        const FieldSpec *spec = classify(label);
        if (!spec) fail(NamespaceErrc::MalformedLabel, "unexpected label '" + labels[i] + "'");
        std::uint32_t v = parse_value(*spec, label);
        int rank = static_cast<int>(spec->field);
        if (rank <= last_rank) fail(NamespaceErrc::WrongOrder, "'" + labels[i] + "' out of canonical order");
        last_rank = rank;
        switch (spec->field) {
        case Field::Minor:
            if (v == kAnyMinor) fail(NamespaceErrc::MalformedLabel, "minor equals wildcard value");
            d.minor_version = v;
            break;
        case Field::Major:
            if (v == kAnyMajor) fail(NamespaceErrc::MalformedLabel, "major equals wildcard value");
            d.major_version = static_cast<std::uint8_t>(v);
            break;
        case Field::Instance:
            if (v == kAnyInstance) fail(NamespaceErrc::MalformedLabel, "instance equals wildcard value");
            d.instance_id = static_cast<std::uint16_t>(v);
            break;
        case Field::Id:
            d.service_id = static_cast<std::uint16_t>(v);
            have_id = true;
            break;
        }
    }
    if (!have_id) fail(NamespaceErrc::MalformedLabel, "missing id label");
    check_combination(d);
    return d;
}

ServiceDescription from_query_name(const DnsName &name, const DnsName &parent) {
    ServiceDescription d = from_query_name(name);
    auto q = to_query_name(d, parent);
    if (q.labels.size() + parent.label_count() != name.label_count() || !name.is_subdomain_of(parent))
        fail(NamespaceErrc::WrongParent, name.to_string() + " is not under " + parent.to_string());
    return d;
}

ServiceDescription from_query_name(const ServiceQueryName &name) {
    return from_query_name(name.to_dns_name(), name.parent);
}

std::vector<ServiceQueryName> enumerate_valid_names(const ServiceDescription &c, const DnsName &parent) {
    if (!c.is_concrete()) fail(NamespaceErrc::InvalidCombination, "enumeration needs a concrete description");
    std::vector<ServiceQueryName> out;
    out.reserve(6);
    // Bit 2: minor, bit 1: major, bit 0: instance; listed in the same order as the
    // conventional table of valid names.
    for (int mask : {7, 3, 6, 1, 2, 0}) {
        bool minor = mask & 4, major = mask & 2, instance = mask & 1;
        ServiceDescription d{c.service_id, std::nullopt, std::nullopt, std::nullopt};
        if (instance) d.instance_id = c.instance_id;
        if (major) d.major_version = c.major_version;
        if (minor) d.minor_version = c.minor_version;
        out.push_back(to_query_name(d, parent));
    }
    return out;
}

}  // namespace sdsec
