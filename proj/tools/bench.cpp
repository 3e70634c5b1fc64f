// Discovery and subscription latency benchmark.

#include "sdsec/bench.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace sdsec;

int main(int argc, char **argv) {
    CLI::App app{"Measures service discovery and subscription latency"};
    std::string variant;
    int samples = 50;
    std::string out_path = "results.csv";
    std::uint64_t seed = 1;
    std::string transport = "inproc";
    int timeout_ms = 5000;
    app.add_option("--variant", variant, "someip-sd, someip-sd-auth, dnssec or dnssec-dane")
        ->required()
        ->check(CLI::IsMember({"someip-sd", "someip-sd-auth", "dnssec", "dnssec-dane"}));
    app.add_option("--samples", samples, "number of subscriber runs")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", out_path, "CSV output")->capture_default_str();
    app.add_option("--seed", seed, "seed for the SD initial delays")->capture_default_str();
    app.add_option("--transport", transport, "udp or inproc")
        ->capture_default_str()
        ->check(CLI::IsMember({"udp", "inproc"}));
    app.add_option("--timeout-ms", timeout_ms, "per-sample limit")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    BenchConfig cfg;
    cfg.mode = parse_variant(variant);
    cfg.samples = samples;
    cfg.seed = seed;
    cfg.transport = parse_transport(transport);
    cfg.sample_timeout = std::chrono::milliseconds(timeout_ms);

    BenchRun run;
    try {
        run = run_benchmark(cfg);
    } catch (const BenchError &e) {
        std::cerr << "bench: " << e.what() << std::endl;
        return 2;
    }

    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "bench: cannot write " << out_path << std::endl;
        return 2;
    }
    write_csv(out, run);

    std::size_t failed = 0;
    for (const auto &s : run.samples)
        if (!s.connected) {
            ++failed;
            std::cerr << "run " << s.run_index << ": " << s.failure << '\n';
        }

    std::vector<std::pair<std::string, Summary>> rows;
    auto add = [&](const std::string &label, const std::vector<double> &v) {
        if (!v.empty()) rows.emplace_back(variant + " " + label, summarize(v));
    };
    add("discovery", run.discovery());
    add("subscription", run.subscription());
    if (uses_auth(cfg.mode)) {
        add("sign", run.sign_times());
        add("verify", run.verify_times());
    }
    std::cout << "latency in ms, " << transport << " transport, seed " << seed << "\n"
              << format_summary_table(rows) << "connected " << run.samples.size() - failed << "/"
              << run.samples.size() << " (timeouts " << run.timeouts << "), SD multicast "
              << run.traffic.sd_multicast << ", DNS queries " << run.traffic.dns_queries << "\n"
              << "wrote " << out_path << std::endl;
    return failed == 0 ? 0 : 1;
}
