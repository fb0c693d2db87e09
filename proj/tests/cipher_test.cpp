#include <gtest/gtest.h>

#include <random>

#include "hbesso/cipher.hpp"
#include "oracle/reference_cipher.hpp"

using namespace hbesso;
using namespace hbesso::cipher;

namespace {

Bytes hex(std::string_view h) { return *from_hex(h); }

StateBlock random_block(std::mt19937_64& rng) {
    StateBlock s;
    for (auto& b : s.bytes) b = static_cast<std::uint8_t>(rng());
    return s;
}

Bytes random_key(std::mt19937_64& rng, std::size_t len) {
    Bytes k(len);
    for (auto& b : k) b = static_cast<std::uint8_t>(rng());
    return k;
}

oracle::ReferenceCipher::Block to_ref(const StateBlock& s) { return s.bytes; }

struct Kat {
    const char* key;
    const char* plaintext;
    const char* ciphertext;
};

// Published known-answer vectors for this round structure (FIPS-197
// appendix C), plus the all-zero 128-bit case.
constexpr Kat kPublishedVectors[] = {
    {"000102030405060708090a0b0c0d0e0f", "00112233445566778899aabbccddeeff", "69c4e0d86a7b0430d8cdb78070b4c55a"},
    {"000102030405060708090a0b0c0d0e0f1011121314151617", "00112233445566778899aabbccddeeff",
     "dda97ca4864cdfe06eaf70a0ec0d7191"},
    {"000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f", "00112233445566778899aabbccddeeff",
     "8ea2b7ca516745bfeafc49904b496089"},
    {"00000000000000000000000000000000", "00000000000000000000000000000000", "66e94bd4ef8a2c3b884cfa59ca342b2e"},
};

}  // namespace

TEST(ReferenceOracle, MatchesPublishedVectors) {
    for (const auto& v : kPublishedVectors) {
        oracle::ReferenceCipher ref(hex(v.key));
        oracle::ReferenceCipher::Block p{};
        auto pt = hex(v.plaintext);
        std::copy(pt.begin(), pt.end(), p.begin());
        auto c = ref.encrypt(p);
        EXPECT_EQ(to_hex(c), v.ciphertext) << v.key;
        EXPECT_EQ(ref.decrypt(c), p);
    }
}

TEST(StateBlock, ColumnMajorLayout) {
    StateBlock s;
    for (int i = 0; i < 16; ++i) s.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    EXPECT_EQ(s.at(1, 0), 1);
    EXPECT_EQ(s.at(0, 1), 4);
    EXPECT_EQ(s.at(3, 3), 15);
    EXPECT_EQ(StateBlock::from_matrix(s.to_matrix()), s);
    EXPECT_THROW(StateBlock::from(Bytes(15)), std::invalid_argument);
}

TEST(SubBytes, MatchesIndependentSBoxGenerator) {
    const auto expected = oracle::sbox_table();
    EXPECT_EQ(sbox().forward, expected);
    EXPECT_EQ(sub_bytes(StateBlock{}, Direction::forward).bytes[0], 0x63);
}

TEST(SubBytes, BijectionExhaustive) {
    std::array<bool, 256> seen{};
    for (int x = 0; x < 256; ++x) {
        const auto y = sbox().forward[static_cast<std::size_t>(x)];
        EXPECT_FALSE(seen[y]);
        seen[y] = true;
        EXPECT_EQ(sbox().inverse[y], x);
    }
}

TEST(SubBytes, ByteWiseAndInvertible) {
    std::mt19937_64 rng(1);
    for (int b = 0; b < 256; ++b) {
        StateBlock s;
        s.bytes.fill(static_cast<std::uint8_t>(b));
        auto f = sub_bytes(s, Direction::forward);
        for (auto v : f.bytes) EXPECT_EQ(v, sbox().forward[static_cast<std::size_t>(b)]);
    }
    for (int i = 0; i < 100; ++i) {
        auto s = random_block(rng);
        EXPECT_EQ(sub_bytes(sub_bytes(s, Direction::forward), Direction::inverse), s);
    }
}

TEST(ShiftRows, ConstantRowsUnchanged) {
    StateBlock s;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) s.at(r, c) = static_cast<std::uint8_t>(0x10 * r + 7);
    EXPECT_EQ(shift_rows(s, Direction::forward), s);
}

TEST(ShiftRows, RowOneRotatesLeftByOne) {
    StateBlock s;
    for (int c = 0; c < 4; ++c) s.at(1, c) = static_cast<std::uint8_t>('a' + c);
    auto out = shift_rows(s, Direction::forward);
    EXPECT_EQ(out.at(1, 0), 'b');
    EXPECT_EQ(out.at(1, 1), 'c');
    EXPECT_EQ(out.at(1, 2), 'd');
    EXPECT_EQ(out.at(1, 3), 'a');
}

TEST(ShiftRows, MatchesNaiveIndexArithmeticAndInverts) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        auto s = random_block(rng);
        auto f = shift_rows(s, Direction::forward);
        // byte at (r, c) comes from flat index 4*((c + r) % 4) + r
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                ASSERT_EQ(f.bytes[static_cast<std::size_t>(4 * c + r)],
                          s.bytes[static_cast<std::size_t>(4 * ((c + r) % 4) + r)]);
        ASSERT_EQ(shift_rows(f, Direction::inverse), s);
    }
}

TEST(MixColumns, ZeroColumnStaysZero) {
    EXPECT_EQ(mix_columns(StateBlock{}, Direction::forward), StateBlock{});
}

TEST(MixColumns, FieldMultiplyMatchesSchoolbook) {
    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b)
            ASSERT_EQ(gf_mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)),
                      oracle::gf_mul_schoolbook(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)));
}

TEST(MixColumns, SingleByteColumnsInvert) {
    // every value in every row position of every column
    for (int pos = 0; pos < 16; ++pos)
        for (int v = 0; v < 256; ++v) {
            StateBlock s;
            s.bytes[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(v);
            ASSERT_EQ(mix_columns(mix_columns(s, Direction::forward), Direction::inverse), s);
        }
}

TEST(MixColumns, ForwardTimesInverseIsIdentity) {
    const std::uint8_t fwd[4] = {0x02, 0x03, 0x01, 0x01};
    const std::uint8_t inv[4] = {0x0e, 0x0b, 0x0d, 0x09};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            std::uint8_t acc = 0;
            for (int k = 0; k < 4; ++k)
                acc ^= oracle::gf_mul_schoolbook(fwd[(k - i + 4) % 4], inv[(j - k + 4) % 4]);
            EXPECT_EQ(acc, i == j ? 1 : 0);
        }
}

TEST(AddRoundKey, XorLaws) {
    std::mt19937_64 rng(3);
    auto s = random_block(rng);
    std::array<std::uint8_t, 16> zero{};
    EXPECT_EQ(add_round_key(s, zero), s);
    auto k = random_block(rng).bytes;
    EXPECT_EQ(add_round_key(add_round_key(s, k), k), s);
    EXPECT_EQ(add_round_key(s, s.bytes), StateBlock{});
}

TEST(ExpandKey, ScheduleLengths) {
    EXPECT_EQ(expand_key(CipherKey(Bytes(16))).words().size(), 44u);
    EXPECT_EQ(expand_key(CipherKey(Bytes(24))).words().size(), 52u);
    EXPECT_EQ(expand_key(CipherKey(Bytes(32))).words().size(), 60u);
    EXPECT_EQ(expand_key(CipherKey(Bytes(16))).rounds(), 10);
    EXPECT_EQ(expand_key(CipherKey(Bytes(24))).rounds(), 12);
    EXPECT_EQ(expand_key(CipherKey(Bytes(32))).rounds(), 14);
}

TEST(ExpandKey, PrefixIsKeyMaterial) {
    auto key = hex("2b7e151628aed2a6abf7158809cf4f3c");
    auto ks = expand_key(CipherKey(key));
    EXPECT_EQ(ks.words()[0], 0x2b7e1516u);
    EXPECT_EQ(ks.words()[3], 0x09cf4f3cu);
    // Published expansion for this key ends in b6630ca6.
    EXPECT_EQ(ks.words()[43], 0xb6630ca6u);
}

TEST(ExpandKey, RejectsBadLengths) {
    for (std::size_t n : {0u, 8u, 15u, 17u, 20u, 31u, 33u, 64u})
        EXPECT_THROW(CipherKey(Bytes(n)), std::invalid_argument) << n;
}

TEST(EncryptBlock, AgreesWithReferenceOnRandomInputs) {
    std::mt19937_64 rng(4);
    for (std::size_t len : {16u, 24u, 32u}) {
        for (int i = 0; i < 200; ++i) {
            auto key = random_key(rng, len);
            oracle::ReferenceCipher ref(key);
            BlockCipher c(key);
            auto p = random_block(rng);
            ASSERT_EQ(c.encrypt(p).bytes, ref.encrypt(to_ref(p)));
        }
    }
}

TEST(EncryptBlock, AllZeroKnownAnswer) {
    BlockCipher c(Bytes(16));
    auto ct = c.encrypt(StateBlock{});
    EXPECT_EQ(to_hex(ct.bytes), "66e94bd4ef8a2c3b884cfa59ca342b2e");
    EXPECT_EQ(c.decrypt(ct), StateBlock{});
}

TEST(EncryptBlock, RoundTripAllSizes) {
    std::mt19937_64 rng(5);
    for (std::size_t len : {16u, 24u, 32u})
        for (int i = 0; i < 1000; ++i) {
            BlockCipher c(random_key(rng, len));
            auto p = random_block(rng);
            ASSERT_EQ(c.decrypt(c.encrypt(p)), p);
            ASSERT_EQ(c.encrypt(c.decrypt(p)), p);
        }
}

TEST(EncryptBlock, Deterministic) {
    std::mt19937_64 rng(6);
    BlockCipher c(random_key(rng, 16));
    auto p = random_block(rng);
    EXPECT_EQ(c.encrypt(p), c.encrypt(p));
}

TEST(EncryptBlock, SingleBitFlipAvalanche) {
    std::mt19937_64 rng(7);
    long flipped_bits = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        BlockCipher c(random_key(rng, 16));
        auto p = random_block(rng);
        auto q = p;
        q.bytes[rng() % 16] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        auto a = c.encrypt(p), b = c.encrypt(q);
        ASSERT_NE(a, b);
        for (int j = 0; j < 16; ++j) flipped_bits += __builtin_popcount(a.bytes[static_cast<std::size_t>(j)] ^ b.bytes[static_cast<std::size_t>(j)]);
    }
    const double mean = static_cast<double>(flipped_bits) / trials;
    RecordProperty("mean_flipped_bits", std::to_string(mean));
}

TEST(DecryptBlock, WrongKeyDiffers) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        auto p = random_block(rng);
        BlockCipher right(random_key(rng, 16)), wrong(random_key(rng, 16));
        ASSERT_NE(wrong.decrypt(right.encrypt(p)), p);
    }
}
