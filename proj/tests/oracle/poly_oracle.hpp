#pragma once

// Arbitrary-precision polynomial evaluation, written directly from the MAC
// definition with explicit reduction mod 2^130 - 5.

#include <array>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using boost::multiprecision::cpp_int;

inline cpp_int le_to_int(const std::uint8_t* p, std::size_t n) {
    cpp_int v = 0;
    for (std::size_t i = n; i-- > 0;) v = (v << 8) + p[i];
    return v;
}

inline std::array<std::uint8_t, 16> poly_tag(const std::array<std::uint8_t, 16>& r_clamped,
                                             const std::array<std::uint8_t, 16>& s,
                                             const std::vector<std::uint8_t>& msg) {
    const cpp_int p = (cpp_int(1) << 130) - 5;
    const cpp_int r = le_to_int(r_clamped.data(), 16);

    std::vector<cpp_int> chunks;
    for (std::size_t off = 0; off < msg.size(); off += 16) {
        const std::size_t n = std::min<std::size_t>(16, msg.size() - off);
        chunks.push_back(le_to_int(msg.data() + off, n) + (cpp_int(1) << (8 * n)));
    }

    // sum c_i * r^(n - i + 1) for i = 1..n
    cpp_int acc = 0;
    const std::size_t n = chunks.size();
    for (std::size_t i = 1; i <= n; ++i) {
        cpp_int power = 1;
        for (std::size_t e = 0; e < n - i + 1; ++e) power *= r;
        acc += chunks[i - 1] * power;
    }
    acc %= p;
    acc = (acc + le_to_int(s.data(), 16)) % (cpp_int(1) << 128);

    std::array<std::uint8_t, 16> out{};
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(acc & 0xff);
        acc >>= 8;
    }
    return out;
}

}  // namespace oracle
