#include "hbesso/poly_mac.hpp"

#include <algorithm>
#include <stdexcept>

namespace hbesso::mac {

namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kMask44 = 0xfffffffffffULL;
constexpr std::uint64_t kMask42 = 0x3ffffffffffULL;

// Accumulator h and point r held in three limbs of 44, 44 and 42 bits.
struct Limbs {
    std::uint64_t l0 = 0, l1 = 0, l2 = 0;

    static Limbs split(std::uint64_t lo, std::uint64_t hi) {
        return {lo & kMask44, ((lo >> 44) | (hi << 20)) & kMask44, (hi >> 24) & kMask42};
    }
};

class Evaluator {
public:
    explicit Evaluator(const std::array<std::uint8_t, 16>& r)
        : r_(Limbs::split(load_le64(r.data()), load_le64(r.data() + 8))),
          s1_(r_.l1 * (5 << 2)),
          s2_(r_.l2 * (5 << 2)) {}

    // `padded` holds the 16 chunk bytes; `top_bit` says whether the 0x01
    // marker lands at bit 128 (full chunk) or already inside the 16 bytes.
    void absorb(const std::uint8_t* padded, bool top_bit) {
        const Limbs c = Limbs::split(load_le64(padded), load_le64(padded + 8));
        h_.l0 += c.l0;
        h_.l1 += c.l1;
        h_.l2 += c.l2 | (top_bit ? (1ULL << 40) : 0);

        const u128 d0 = u128{h_.l0} * r_.l0 + u128{h_.l1} * s2_ + u128{h_.l2} * s1_;
        u128 d1 = u128{h_.l0} * r_.l1 + u128{h_.l1} * r_.l0 + u128{h_.l2} * s2_;
        u128 d2 = u128{h_.l0} * r_.l2 + u128{h_.l1} * r_.l1 + u128{h_.l2} * r_.l0;

        std::uint64_t carry = static_cast<std::uint64_t>(d0 >> 44);
        h_.l0 = static_cast<std::uint64_t>(d0) & kMask44;
        d1 += carry;
        carry = static_cast<std::uint64_t>(d1 >> 44);
        h_.l1 = static_cast<std::uint64_t>(d1) & kMask44;
        d2 += carry;
        carry = static_cast<std::uint64_t>(d2 >> 42);
        h_.l2 = static_cast<std::uint64_t>(d2) & kMask42;
        h_.l0 += carry * 5;
        carry = h_.l0 >> 44;
        h_.l0 &= kMask44;
        h_.l1 += carry;
    }

    MacTag finish(const std::array<std::uint8_t, 16>& s) {
        std::uint64_t h0 = h_.l0, h1 = h_.l1, h2 = h_.l2;

        // Fully propagate carries.
        std::uint64_t c = h1 >> 44;
        h1 &= kMask44;
        h2 += c;
        c = h2 >> 42;
        h2 &= kMask42;
        h0 += c * 5;
        c = h0 >> 44;
        h0 &= kMask44;
        h1 += c;
        c = h1 >> 44;
        h1 &= kMask44;
        h2 += c;
        c = h2 >> 42;
        h2 &= kMask42;
        h0 += c * 5;
        c = h0 >> 44;
        h0 &= kMask44;
        h1 += c;

        // g = h + 5 - 2^130; keep g when it did not underflow.
        std::uint64_t g0 = h0 + 5;
        c = g0 >> 44;
        g0 &= kMask44;
        std::uint64_t g1 = h1 + c;
        c = g1 >> 44;
        g1 &= kMask44;
        const std::uint64_t g2 = h2 + c - (1ULL << 42);

        const std::uint64_t keep_g = (g2 >> 63) - 1;
        h0 = (h0 & ~keep_g) | (g0 & keep_g);
        h1 = (h1 & ~keep_g) | (g1 & keep_g);
        h2 = (h2 & ~keep_g) | (g2 & keep_g);

        const Limbs sl = Limbs::split(load_le64(s.data()), load_le64(s.data() + 8));
        h0 += sl.l0;
        c = h0 >> 44;
        h0 &= kMask44;
        h1 += sl.l1 + c;
        c = h1 >> 44;
        h1 &= kMask44;
        h2 += sl.l2 + c;
        h2 &= kMask42;

        MacTag tag;
        store_le64(tag.bytes.data(), h0 | (h1 << 44));
        store_le64(tag.bytes.data() + 8, (h1 >> 20) | (h2 << 24));
        return tag;
    }

private:
    Limbs r_;
    std::uint64_t s1_, s2_;
    Limbs h_;
};

}  // namespace

std::array<std::uint8_t, 16> clamp(std::array<std::uint8_t, 16> r) {
    for (int i : {3, 7, 11, 15}) r[static_cast<std::size_t>(i)] &= 0x0f;
    for (int i : {4, 8, 12}) r[static_cast<std::size_t>(i)] &= 0xfc;
    return r;
}

MacKey MacKey::from(ByteView r_raw, ByteView s) {
    if (r_raw.size() != 16 || s.size() != 16) throw std::invalid_argument("MAC key halves must be 16 bytes");
    MacKey key;
    std::copy(r_raw.begin(), r_raw.end(), key.r.begin());
    std::copy(s.begin(), s.end(), key.s.begin());
    key.r = clamp(key.r);
    return key;
}

MacTag mac_compute(const MacKey& key, ByteView message) {
    Evaluator ev(key.r);
    std::size_t off = 0;
    for (; off + 16 <= message.size(); off += 16) ev.absorb(message.data() + off, true);
    if (off < message.size()) {
        std::array<std::uint8_t, 16> last{};
        const std::size_t rest = message.size() - off;
        std::copy_n(message.data() + off, rest, last.begin());
        last[rest] = 0x01;
        ev.absorb(last.data(), false);
    }
    return ev.finish(key.s);
}

bool mac_verify(const MacKey& key, ByteView message, const MacTag& tag) {
    const MacTag expected = mac_compute(key, message);
    return constant_time_equal(expected.bytes, tag.bytes);
}

}  // namespace hbesso::mac
