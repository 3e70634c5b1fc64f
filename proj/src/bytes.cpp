#include "sdsec/bytes.hpp"

#include <openssl/evp.h>

namespace sdsec {

std::string to_hex(ByteView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string base64_encode_unpadded(ByteView data) {
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()), data.data(),
                            static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    while (!out.empty() && out.back() == '=') out.pop_back();
    return out;
}

Bytes base64_decode_unpadded(std::string_view text) {
    if (text.size() % 4 == 1) throw std::invalid_argument("invalid base64 length");
    for (char c : text) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                  c == '+' || c == '/';
        if (!ok) throw std::invalid_argument("invalid base64 character");
    }
    std::string padded(text);
    std::size_t pad = (4 - padded.size() % 4) % 4;
    padded.append(pad, '=');
    Bytes out(padded.size() / 4 * 3);
    int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char *>(padded.data()),
                            static_cast<int>(padded.size()));
    if (n < 0) throw std::invalid_argument("invalid base64");
    out.resize(static_cast<std::size_t>(n) - pad);
    // Reject non-canonical trailing bits so that decode is the exact inverse of encode.
    if (base64_encode_unpadded(out) != text) throw std::invalid_argument("non-canonical base64");
    return out;
}

}  // namespace sdsec
