// Authoritative name server for a service catalog.

#include "common.hpp"
#include "sdsec/udp.hpp"
#include "sdsec/zone.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace sdsec;

int main(int argc, char **argv) {
    CLI::App app{"Signs a service catalog and serves it over UDP"};
    std::string catalog_path;
    std::string listen = "127.0.0.1:5300";
    std::string anchor_out;
    app.add_option("--zone", catalog_path, "service catalog (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--listen", listen, "address:port to answer on")->capture_default_str();
    app.add_option("--anchor-out", anchor_out, "also write the trust anchor (DS) to this file");
    CLI11_PARSE(app, argc, argv);

    try {
        const ServiceCatalog catalog = load_catalog(catalog_path);
        // A key seed in the catalog makes the anchor stable across restarts.
        const ZoneKeys service_keys = catalog.key_seed ? ZoneKeys::derive(*catalog.key_seed) : ZoneKeys::generate();
        const ZoneKeys anchor_keys =
            catalog.key_seed ? ZoneKeys::derive(*catalog.key_seed + "/anchor") : ZoneKeys::generate();
        const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
        ZoneBundle bundle = build_zones(catalog, service_keys, anchor_keys, default_validity(now));

        std::size_t rrsets = 0;
        for (const auto &z : bundle.zones) rrsets += z.rrset_count();
        const std::string anchor = bundle.anchor.to_string();
        if (!anchor_out.empty()) {
            std::ofstream(anchor_out) << anchor << '\n';
        }

        auto server = std::make_shared<AuthoritativeServer>(std::move(bundle.zones));
        UdpResponder responder(SocketAddress::parse(listen),
                               [server](ByteView q, const SocketAddress &) { return server->answer(q); });
        std::cout << "serving " << catalog.entries.size() << " services, " << rrsets << " signed RRsets on "
                  << responder.local_address().to_string() << "\n"
                  << "anchor: " << anchor << std::endl;
        tools::wait_for_signal();
        responder.stop();
        std::cout << "answered " << server->queries_answered() << " queries" << std::endl;
    } catch (const std::exception &e) {
        std::cerr << "nameserver: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
