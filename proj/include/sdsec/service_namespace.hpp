#pragma once

// Mapping between SOME/IP service descriptions and DNS query names.
//
//   _someip[.minor0x<8 hex>][.major0x<2 hex>][.instance0x<4 hex>].id0x<4 hex>.<parent>
//
// Wildcarded fields are left out. A minor label without a major label is invalid, which
// leaves six valid names for every fully specified service instance.

#include "sdsec/dns.hpp"
#include "sdsec/sd_wire.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace sdsec {

enum class NamespaceErrc {
    InvalidCombination,
    MalformedLabel,
    WrongOrder,
    WrongParent,
};

std::string to_string(NamespaceErrc code);

class NamespaceError : public std::runtime_error {
public:
    NamespaceError(NamespaceErrc code, const std::string &what)
        : std::runtime_error(to_string(code) + ": " + what), code_(code) {}
    [[nodiscard]] NamespaceErrc code() const { return code_; }

private:
    NamespaceErrc code_;
};

inline const DnsName &default_parent_domain() {
    static const DnsName parent = DnsName::parse("service.");
    return parent;
}

struct ServiceQueryName {
    std::vector<std::string> labels;  // "_someip" followed by the field labels
    DnsName parent;

    [[nodiscard]] DnsName to_dns_name() const;
    [[nodiscard]] std::string to_string() const { return to_dns_name().to_string(); }

    friend bool operator==(const ServiceQueryName &, const ServiceQueryName &) = default;
};

ServiceQueryName to_query_name(const ServiceDescription &desc, const DnsName &parent = default_parent_domain());

/// Parses a query name whose field labels end at the "id" label; everything after it is
/// the parent domain.
ServiceDescription from_query_name(const DnsName &name);
/// As above, and additionally requires the parent domain to equal `parent`.
ServiceDescription from_query_name(const DnsName &name, const DnsName &parent);
ServiceDescription from_query_name(const ServiceQueryName &name);

/// The six names under which the concrete description must be resolvable.
std::vector<ServiceQueryName> enumerate_valid_names(const ServiceDescription &concrete,
                                                    const DnsName &parent = default_parent_domain());

/// Fully specified name of a concrete description (the TLSA anchor name).
inline DnsName service_name(const ServiceDescription &concrete, const DnsName &parent = default_parent_domain()) {
    return to_query_name(concrete, parent).to_dns_name();
}

}  // namespace sdsec
