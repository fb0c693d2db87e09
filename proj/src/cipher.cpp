#include "hbesso/cipher.hpp"

#include <algorithm>
#include <stdexcept>

namespace hbesso::cipher {

namespace {

constexpr std::uint8_t xtime(std::uint8_t a) {
    return static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1b : 0x00));
}

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    std::uint8_t r = 0;
    while (b) {
        if (b & 1) r ^= a;
        a = xtime(a);
        b >>= 1;
    }
    return r;
}

constexpr std::uint8_t rotl8(std::uint8_t x, int n) {
    return static_cast<std::uint8_t>((x << n) | (x >> (8 - n)));
}

// Walks the multiplicative group with generator 03 to get inverses, then
// applies the affine map b ^ rotl(b,1..4) ^ 0x63.
constexpr SBoxTable generate_sbox() {
    std::array<std::uint8_t, 256> exp{};
    std::array<std::uint8_t, 256> log{};
    std::uint8_t x = 1;
    for (int i = 0; i < 255; ++i) {
        exp[static_cast<std::size_t>(i)] = x;
        log[x] = static_cast<std::uint8_t>(i);
        x = mul(x, 3);
    }
    SBoxTable t{};
    for (int v = 0; v < 256; ++v) {
        std::uint8_t inv = 0;
        if (v != 0) inv = exp[static_cast<std::size_t>((255 - log[static_cast<std::size_t>(v)]) % 255)];
        std::uint8_t s = static_cast<std::uint8_t>(inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^
                                                   rotl8(inv, 3) ^ rotl8(inv, 4) ^ 0x63);
        t.forward[static_cast<std::size_t>(v)] = s;
        t.inverse[s] = static_cast<std::uint8_t>(v);
    }
    return t;
}

constexpr std::array<std::uint8_t, 256> kForwardSBox = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
};

constexpr SBoxTable kSBox = generate_sbox();
static_assert(kSBox.forward == kForwardSBox, "generated S-box disagrees with the reference table");

constexpr std::array<std::uint8_t, 256> mul_table(std::uint8_t k) {
    std::array<std::uint8_t, 256> t{};
    for (int v = 0; v < 256; ++v) t[static_cast<std::size_t>(v)] = mul(static_cast<std::uint8_t>(v), k);
    return t;
}

constexpr auto kMul2 = mul_table(0x02);
constexpr auto kMul3 = mul_table(0x03);
constexpr auto kMul9 = mul_table(0x09);
constexpr auto kMul11 = mul_table(0x0b);
constexpr auto kMul13 = mul_table(0x0d);
constexpr auto kMul14 = mul_table(0x0e);

std::uint32_t sub_word(std::uint32_t w) {
    const auto& f = kSBox.forward;
    return (std::uint32_t{f[(w >> 24) & 0xff]} << 24) | (std::uint32_t{f[(w >> 16) & 0xff]} << 16) |
           (std::uint32_t{f[(w >> 8) & 0xff]} << 8) | std::uint32_t{f[w & 0xff]};
}

std::uint32_t rot_word(std::uint32_t w) { return (w << 8) | (w >> 24); }

}  // namespace

StateBlock StateBlock::from(ByteView b) {
    if (b.size() != kBlockSize) throw std::invalid_argument("state block must be 16 bytes");
    StateBlock s;
    std::copy(b.begin(), b.end(), s.bytes.begin());
    return s;
}

StateBlock::Matrix StateBlock::to_matrix() const {
    Matrix m{};
    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < 4; ++r) m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = at(r, c);
    return m;
}

StateBlock StateBlock::from_matrix(const Matrix& m) {
    StateBlock s;
    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < 4; ++r) s.at(r, c) = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return s;
}

CipherKey::CipherKey(ByteView material) : material_(material.begin(), material.end()) {
    switch (material.size()) {
        case 16: size_ = KeySize::bits128; break;
        case 24: size_ = KeySize::bits192; break;
        case 32: size_ = KeySize::bits256; break;
        default: throw std::invalid_argument("cipher key must be 16, 24 or 32 bytes");
    }
}

KeySchedule::KeySchedule(std::vector<std::uint32_t> words, int rounds)
    : words_(std::move(words)), rounds_(rounds) {
    if (words_.size() != static_cast<std::size_t>(4 * (rounds_ + 1)))
        throw std::invalid_argument("key schedule length does not match round count");
    round_keys_.resize(static_cast<std::size_t>(rounds_ + 1));
    for (std::size_t r = 0; r < round_keys_.size(); ++r)
        for (std::size_t i = 0; i < 4; ++i) store_be32(round_keys_[r].data() + 4 * i, words_[4 * r + i]);
}

const std::array<std::uint8_t, kBlockSize>& KeySchedule::round_key(int round) const {
    return round_keys_.at(static_cast<std::size_t>(round));
}

const SBoxTable& sbox() { return kSBox; }

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) { return mul(a, b); }

StateBlock sub_bytes(const StateBlock& s, Direction d) {
    const auto& table = d == Direction::forward ? kSBox.forward : kSBox.inverse;
    StateBlock out;
    for (std::size_t i = 0; i < kBlockSize; ++i) out.bytes[i] = table[s.bytes[i]];
    return out;
}

StateBlock shift_rows(const StateBlock& s, Direction d) {
    // Output byte i takes input byte kFrom[i]: row r of column c reads
    // column (c + r) mod 4 going forward, (c - r) mod 4 going back.
    static constexpr std::array<std::uint8_t, 16> kForward{0, 5, 10, 15, 4, 9, 14, 3, 8, 13, 2, 7, 12, 1, 6, 11};
    static constexpr std::array<std::uint8_t, 16> kInverse{0, 13, 10, 7, 4, 1, 14, 11, 8, 5, 2, 15, 12, 9, 6, 3};
    const auto& from = d == Direction::forward ? kForward : kInverse;
    StateBlock out;
    for (std::size_t i = 0; i < kBlockSize; ++i) out.bytes[i] = s.bytes[from[i]];
    return out;
}

StateBlock mix_columns(const StateBlock& s, Direction d) {
    // Circulant rows: forward (02 03 01 01), inverse (0e 0b 0d 09), each
    // row rotated right by its index.
    StateBlock out;
    for (std::size_t c = 0; c < 4; ++c) {
        const std::uint8_t* in = s.bytes.data() + 4 * c;
        std::uint8_t* o = out.bytes.data() + 4 * c;
        const std::uint8_t a0 = in[0], a1 = in[1], a2 = in[2], a3 = in[3];
        if (d == Direction::forward) {
            o[0] = static_cast<std::uint8_t>(kMul2[a0] ^ kMul3[a1] ^ a2 ^ a3);
            o[1] = static_cast<std::uint8_t>(a0 ^ kMul2[a1] ^ kMul3[a2] ^ a3);
            o[2] = static_cast<std::uint8_t>(a0 ^ a1 ^ kMul2[a2] ^ kMul3[a3]);
            o[3] = static_cast<std::uint8_t>(kMul3[a0] ^ a1 ^ a2 ^ kMul2[a3]);
        } else {
            o[0] = static_cast<std::uint8_t>(kMul14[a0] ^ kMul11[a1] ^ kMul13[a2] ^ kMul9[a3]);
            o[1] = static_cast<std::uint8_t>(kMul9[a0] ^ kMul14[a1] ^ kMul11[a2] ^ kMul13[a3]);
            o[2] = static_cast<std::uint8_t>(kMul13[a0] ^ kMul9[a1] ^ kMul14[a2] ^ kMul11[a3]);
            o[3] = static_cast<std::uint8_t>(kMul11[a0] ^ kMul13[a1] ^ kMul9[a2] ^ kMul14[a3]);
        }
    }
    return out;
}

StateBlock add_round_key(const StateBlock& s, const std::array<std::uint8_t, kBlockSize>& round_key) {
    StateBlock out;
    for (std::size_t i = 0; i < kBlockSize; ++i) out.bytes[i] = s.bytes[i] ^ round_key[i];
    return out;
}

KeySchedule expand_key(const CipherKey& key) {
    const auto material = key.material();
    const int nk = static_cast<int>(material.size() / 4);
    const int rounds = round_count(key.size_class());
    const int total = 4 * (rounds + 1);

    std::vector<std::uint32_t> w(static_cast<std::size_t>(total));
    for (int i = 0; i < nk; ++i) w[static_cast<std::size_t>(i)] = load_be32(material.data() + 4 * i);

    std::uint8_t rcon = 0x01;
    for (int i = nk; i < total; ++i) {
        std::uint32_t t = w[static_cast<std::size_t>(i - 1)];
        if (i % nk == 0) {
            t = sub_word(rot_word(t)) ^ (std::uint32_t{rcon} << 24);
            rcon = xtime(rcon);
        } else if (nk == 8 && i % nk == 4) {
            t = sub_word(t);
        }
        w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i - nk)] ^ t;
    }
    return KeySchedule(std::move(w), rounds);
}

StateBlock encrypt_block(const StateBlock& plaintext, const KeySchedule& schedule) {
    const int rounds = schedule.rounds();
    StateBlock s = add_round_key(plaintext, schedule.round_key(0));
    for (int round = 1; round < rounds; ++round) {
        s = sub_bytes(s, Direction::forward);
        s = shift_rows(s, Direction::forward);
        s = mix_columns(s, Direction::forward);
        s = add_round_key(s, schedule.round_key(round));
    }
    s = sub_bytes(s, Direction::forward);
    s = shift_rows(s, Direction::forward);
    return add_round_key(s, schedule.round_key(rounds));
}

StateBlock decrypt_block(const StateBlock& ciphertext, const KeySchedule& schedule) {
    const int rounds = schedule.rounds();
    StateBlock s = add_round_key(ciphertext, schedule.round_key(rounds));
    for (int round = rounds - 1; round >= 1; --round) {
        s = shift_rows(s, Direction::inverse);
        s = sub_bytes(s, Direction::inverse);
        s = add_round_key(s, schedule.round_key(round));
        s = mix_columns(s, Direction::inverse);
    }
    s = shift_rows(s, Direction::inverse);
    s = sub_bytes(s, Direction::inverse);
    return add_round_key(s, schedule.round_key(0));
}

}  // namespace hbesso::cipher
