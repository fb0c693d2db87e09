#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hbesso {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string to_string(ByteView b) {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

inline Bytes to_vector(ByteView b) { return {b.begin(), b.end()}; }

std::string to_hex(ByteView b);
std::optional<Bytes> from_hex(std::string_view hex);

// Standard alphabet with padding.
std::string base64_encode(ByteView b);
std::optional<Bytes> base64_decode(std::string_view text);

// Comparison time depends only on the lengths, never on the content.
bool constant_time_equal(ByteView a, ByteView b);

// Big-endian integer helpers used by counter blocks and length fields.
inline void store_be32(std::uint8_t* out, std::uint32_t v) {
    out[0] = static_cast<std::uint8_t>(v >> 24);
    out[1] = static_cast<std::uint8_t>(v >> 16);
    out[2] = static_cast<std::uint8_t>(v >> 8);
    out[3] = static_cast<std::uint8_t>(v);
}

inline void store_be64(std::uint8_t* out, std::uint64_t v) {
    store_be32(out, static_cast<std::uint32_t>(v >> 32));
    store_be32(out + 4, static_cast<std::uint32_t>(v));
}

inline std::uint32_t load_be32(const std::uint8_t* in) {
    return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
           (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

inline std::uint64_t load_le64(const std::uint8_t* in) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
    return v;
}

inline void store_le64(std::uint8_t* out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace hbesso
