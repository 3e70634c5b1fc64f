// Writes an Ed25519 key and a self-signed certificate for a publisher.

#include "sdsec/crypto.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace sdsec;

int main(int argc, char **argv) {
    CLI::App app{"Generates a publisher key and certificate (PEM)"};
    std::string cn = "someip-publisher";
    std::string cert_path, key_path, seed_hex;
    int days = 3650;
    app.add_option("--cn", cn, "certificate common name")->capture_default_str();
    app.add_option("--cert", cert_path, "certificate output")->required();
    app.add_option("--key", key_path, "private key output")->required();
    app.add_option("--seed", seed_hex, "32-byte key seed in hex (default: random)");
    app.add_option("--days", days, "validity")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const Ed25519Key key = seed_hex.empty() ? Ed25519Key::generate() : Ed25519Key::from_seed(from_hex(seed_hex));
        const Bytes der = make_self_signed_certificate(key, cn, days);
        std::ofstream(cert_path) << certificate_pem_from_der(der);
        std::ofstream(key_path) << key.private_pem();
        std::cout << "public key " << to_hex(key.public_key()) << std::endl;
    } catch (const std::exception &e) {
        std::cerr << "gencert: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
