#pragma once

// Discovery/subscription latency harness: one persistent publisher, a fresh subscriber per
// sample, and five-number summaries of the results.

#include "sdsec/engine.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdsec {

enum class BenchErrc { SetupFailure, EmptyInput };

class BenchError : public std::runtime_error {
public:
    BenchError(BenchErrc code, const std::string &what)
        : std::runtime_error((code == BenchErrc::SetupFailure ? "SetupFailure: " : "EmptyInput: ") + what),
          code_(code) {}
    [[nodiscard]] BenchErrc code() const { return code_; }

private:
    BenchErrc code_;
};

enum class BenchTransport { InProc, Udp };

std::string to_string(BenchTransport t);
BenchTransport parse_transport(std::string_view text);

/// The reference service: id 0x0001, instance 0x0002, version 1.2 at 10.0.0.5:30509/udp.
ServiceDescription reference_service();
EndpointInfo reference_endpoint();

/// Publisher key, certificate and catalog for one deployment. The key is derived from `seed`.
struct Deployment {
    Ed25519Key key;
    Bytes certificate;
    ServiceCatalog catalog;
    ZoneBundle zones;

    static Deployment make(EndpointInfo endpoint, std::uint64_t seed, UnixTime now);
    [[nodiscard]] const ServiceCatalogEntry &entry() const { return catalog.entries.front(); }
};

struct BenchConfig {
    VariantMode mode = VariantMode::SomeIpSd;
    int samples = 50;
    std::uint64_t seed = 1;
    BenchTransport transport = BenchTransport::InProc;
    Duration sample_timeout = std::chrono::seconds(5);
    SdTiming timing;
};

struct BenchSample {
    VariantMode variant = VariantMode::SomeIpSd;
    int run_index = 0;
    bool connected = false;
    std::string failure;  // empty when connected
    double discovery_ms = 0;
    double subscription_ms = 0;
    double sign_ms = 0;    // auth modes
    double verify_ms = 0;  // auth modes
    double initial_delay_ms = 0;  // SD modes
};

/// Datagrams of each kind emitted while sampling (warm-up excluded).
struct TrafficCounters {
    std::uint64_t sd_multicast = 0;
    std::uint64_t dns_queries = 0;
};

struct BenchRun {
    BenchConfig config;
    std::vector<BenchSample> samples;
    TrafficCounters traffic;
    int timeouts = 0;

    [[nodiscard]] std::vector<double> discovery() const;
    [[nodiscard]] std::vector<double> subscription() const;
    [[nodiscard]] std::vector<double> sign_times() const;
    [[nodiscard]] std::vector<double> verify_times() const;
};

/// Throws BenchError(SetupFailure) when the deployment cannot be brought up.
BenchRun run_benchmark(const BenchConfig &config);

struct Summary {
    std::size_t count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
    double lower_fence = 0, upper_fence = 0;  // 1.5 IQR
    std::vector<double> outliers;
};

/// Quartiles by linear interpolation between order statistics. Throws BenchError(EmptyInput).
Summary summarize(std::vector<double> values);

/// Header plus one row per sample; latencies in fractional milliseconds.
void write_csv(std::ostream &out, const BenchRun &run);

std::string format_summary_table(const std::vector<std::pair<std::string, Summary>> &rows);

}  // namespace sdsec
