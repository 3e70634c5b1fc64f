#include "sdsec/bench.hpp"

#include <doctest.h>

#include <sstream>

using namespace sdsec;
using namespace std::chrono_literals;

TEST_CASE("summary of a hand-checked set") {
    auto s = summarize({4, 100, 1, 3, 2});
    CHECK(s.count == 5);
    CHECK(s.min == 1);
    CHECK(s.q1 == 2);
    CHECK(s.median == 3);
    CHECK(s.q3 == 4);
    CHECK(s.max == 100);
    CHECK(s.lower_fence == doctest::Approx(-1));
    CHECK(s.upper_fence == doctest::Approx(7));
    REQUIRE(s.outliers.size() == 1);
    CHECK(s.outliers[0] == 100);
    CHECK(s.mean == doctest::Approx(22));
}

TEST_CASE("quartiles interpolate between order statistics") {
    // Same convention as numpy.percentile's default.
    auto s = summarize({3, 1, 4, 1, 5, 9, 2, 6});
    CHECK(s.q1 == doctest::Approx(1.75));
    CHECK(s.median == doctest::Approx(3.5));
    CHECK(s.q3 == doctest::Approx(5.25));
    CHECK(s.outliers.empty());
}

TEST_CASE("constant and single samples") {
    auto s = summarize(std::vector<double>(7, 2.5));
    CHECK(s.min == s.median);
    CHECK(s.median == s.max);
    CHECK(s.outliers.empty());
    auto one = summarize({8});
    CHECK(one.q1 == 8);
    CHECK(one.q3 == 8);
}

TEST_CASE("empty input is an error") {
    try {
        summarize({});
        FAIL("expected EmptyInput");
    } catch (const BenchError &e) {
        CHECK(e.code() == BenchErrc::EmptyInput);
    }
    BenchConfig cfg;
    cfg.samples = 0;
    CHECK_THROWS_AS(run_benchmark(cfg), BenchError);
}

TEST_CASE("transport names") {
    CHECK(parse_transport("udp") == BenchTransport::Udp);
    CHECK(parse_transport("inproc") == BenchTransport::InProc);
    CHECK_THROWS_AS(parse_transport("tcp"), std::invalid_argument);
}

TEST_CASE("one DANE sample has sign and verify times") {
    BenchConfig cfg;
    cfg.mode = VariantMode::DnssecDane;
    cfg.samples = 1;
    auto run = run_benchmark(cfg);
    REQUIRE(run.samples.size() == 1);
    const auto &s = run.samples[0];
    CHECK(s.connected);
    CHECK(s.sign_ms > 0);
    CHECK(s.verify_ms > 0);
    CHECK(s.subscription_ms >= s.sign_ms);
    CHECK(run.traffic.sd_multicast == 0);
    CHECK(run.traffic.dns_queries == 2);  // SVCB and TLSA, both from the warm cache
}

TEST_CASE("csv has a header and one row per sample") {
    BenchConfig cfg;
    cfg.mode = VariantMode::SomeIpSd;
    cfg.samples = 4;
    cfg.seed = 11;
    auto run = run_benchmark(cfg);
    std::ostringstream out;
    write_csv(out, run);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("DISCOVERY_LATENCY,SUBSCRIPTION_LATENCY", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
    for (const auto &s : run.samples) {
        CHECK(s.connected);
        CHECK(s.discovery_ms >= s.initial_delay_ms);
        CHECK(s.discovery_ms >= 10.0);
        CHECK(s.sign_ms == 0);
    }
    CHECK(run.traffic.dns_queries == 0);
    CHECK(run.traffic.sd_multicast > 0);

    auto table = format_summary_table({{"someip-sd discovery", summarize(run.discovery())}});
    CHECK(table.find("median") != std::string::npos);
    CHECK(table.find("someip-sd discovery") != std::string::npos);
}

TEST_CASE("benchmark over loopback sockets") {
    for (auto mode : {VariantMode::SomeIpSdAuth, VariantMode::DnssecDane}) {
        CAPTURE(to_string(mode));
        BenchConfig cfg;
        cfg.mode = mode;
        cfg.samples = 3;
        cfg.transport = BenchTransport::Udp;
        auto run = run_benchmark(cfg);
        REQUIRE(run.samples.size() == 3);
        for (const auto &s : run.samples) {
            CHECK_MESSAGE(s.connected, s.failure);
            CHECK(s.verify_ms > 0);
        }
        if (uses_dns(mode))
            CHECK(run.traffic.sd_multicast == 0);
        else
            CHECK(run.traffic.dns_queries == 0);
    }
}
