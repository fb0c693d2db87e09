#pragma once

// One-time polynomial-evaluation MAC over GF(2^130 - 5).
//
// The message is cut into 16-byte chunks; each chunk gets a trailing 0x01
// byte (the final short chunk is then zero-filled) and is read as a
// little-endian integer c_i. With n chunks:
//
//   tag = ((sum c_i * r^(n-i+1)) mod 2^130-5 + s) mod 2^128
//
// A key must authenticate a single message. Callers derive a fresh key per
// message (see kep.hpp).

#include <array>
#include <cstdint>

#include "hbesso/bytes.hpp"

namespace hbesso::mac {

inline constexpr std::size_t kTagSize = 16;

struct MacTag {
    std::array<std::uint8_t, kTagSize> bytes{};
    friend bool operator==(const MacTag&, const MacTag&) = default;
};

// Clears the top 4 bits of octets 3, 7, 11, 15 and the low 2 bits of
// octets 4, 8, 12.
std::array<std::uint8_t, 16> clamp(std::array<std::uint8_t, 16> r);

struct MacKey {
    std::array<std::uint8_t, 16> r{};  // always clamped
    std::array<std::uint8_t, 16> s{};

    // r_raw is clamped on the way in; both inputs must be 16 bytes.
    static MacKey from(ByteView r_raw, ByteView s);
};

MacTag mac_compute(const MacKey& key, ByteView message);

// Exact tag comparison without early exit.
bool mac_verify(const MacKey& key, ByteView message, const MacTag& tag);

}  // namespace hbesso::mac
