#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdsec {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Thrown by ByteReader when a read runs past the end of its buffer.
class ShortBuffer : public std::runtime_error {
public:
    ShortBuffer() : std::runtime_error("read past end of buffer") {}
};

/// Big-endian appender.
class ByteWriter {
public:
    ByteWriter() = default;
    explicit ByteWriter(Bytes &out) : out_(&out) {}

    void u8(std::uint8_t v) { buf().push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v >> 8));
        u8(static_cast<std::uint8_t>(v));
    }
    void u24(std::uint32_t v) {
        u8(static_cast<std::uint8_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void raw(ByteView v) { buf().insert(buf().end(), v.begin(), v.end()); }
    void raw(std::string_view v) { buf().insert(buf().end(), v.begin(), v.end()); }

    // Writes a placeholder and patches it later; used for length prefixes.
    std::size_t reserve16() {
        std::size_t at = buf().size();
        u16(0);
        return at;
    }
    std::size_t reserve32() {
        std::size_t at = buf().size();
        u32(0);
        return at;
    }
    void patch16(std::size_t at, std::uint16_t v) {
        buf()[at] = static_cast<std::uint8_t>(v >> 8);
        buf()[at + 1] = static_cast<std::uint8_t>(v);
    }
    void patch32(std::size_t at, std::uint32_t v) {
        patch16(at, static_cast<std::uint16_t>(v >> 16));
        patch16(at + 2, static_cast<std::uint16_t>(v));
    }

    [[nodiscard]] std::size_t size() const { return out_ ? out_->size() : own_.size(); }
    Bytes take() { return std::move(own_); }

private:
    Bytes &buf() { return out_ ? *out_ : own_; }

    Bytes own_;
    Bytes *out_ = nullptr;
};

/// Big-endian cursor over a borrowed buffer.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u24() {
        std::uint32_t hi = u8();
        return (hi << 16) | u16();
    }
    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    ByteView take(std::size_t n) {
        need(n);
        auto v = data_.subspan(pos_, n);
        pos_ += n;
        return v;
    }
    ByteView rest() { return take(remaining()); }

    [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
    [[nodiscard]] std::size_t position() const { return pos_; }
    [[nodiscard]] bool empty() const { return remaining() == 0; }
    void seek(std::size_t pos) {
        if (pos > data_.size()) throw ShortBuffer();
        pos_ = pos;
    }
    [[nodiscard]] ByteView whole() const { return data_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw ShortBuffer();
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);  // throws std::invalid_argument

// RFC 4648 alphabet without '=' padding.
std::string base64_encode_unpadded(ByteView data);
Bytes base64_decode_unpadded(std::string_view text);  // throws std::invalid_argument

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace sdsec
