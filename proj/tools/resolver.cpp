// Validating resolver with a stub listener.

#include "common.hpp"
#include "sdsec/resolver.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace sdsec;

namespace {

/// The anchor is either DS text or a file holding it.
TrustAnchor read_anchor(const std::string &arg) {
    std::string text = arg;
    if (std::filesystem::is_regular_file(arg)) {
        std::ifstream in(arg);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    return TrustAnchor::parse(text);
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"DNSSEC validating resolver for service lookups"};
    std::string anchor_arg;
    std::string upstream = "127.0.0.1:5300";
    std::string listen = "127.0.0.1:5301";
    int timeout_ms = 500;
    app.add_option("--anchor", anchor_arg, "trust anchor: DS record text or a file containing it")->required();
    app.add_option("--upstream", upstream, "authoritative server address:port")->capture_default_str();
    app.add_option("--listen", listen, "stub listener address:port")->capture_default_str();
    app.add_option("--timeout-ms", timeout_ms, "per-attempt upstream timeout")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        ResolverConfig cfg;
        cfg.anchor = read_anchor(anchor_arg);
        cfg.timeout = std::chrono::milliseconds(timeout_ms);
        auto resolver = std::make_shared<ValidatingResolver>(
            cfg, std::make_shared<UdpUpstream>(SocketAddress::parse(upstream)));
        UdpResponder listener(SocketAddress::parse(listen),
                              [resolver](ByteView q, const SocketAddress &) { return resolver->handle_query(q); });
        std::cout << "resolving on " << listener.local_address().to_string() << " via " << upstream << ", anchor "
                  << cfg.anchor.to_string() << std::endl;
        tools::wait_for_signal();
        listener.stop();
        const auto s = resolver->stats();
        std::cout << "requests " << s.requests << ", cache hits " << s.cache_hits << ", upstream " << s.upstream_queries
                  << ", bogus " << s.bogus << std::endl;
    } catch (const std::exception &e) {
        std::cerr << "resolver: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
