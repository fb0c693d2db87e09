#pragma once

// HBE block cipher: a 128-bit substitution-permutation network with 128, 192
// and 256-bit keys (10, 12 and 14 rounds).
//
// The 16-byte state is viewed as a 4x4 matrix of GF(2^8) elements filled
// column-major: byte i sits at row i % 4, column i / 4. Schedule words are
// big-endian.

#include <array>
#include <cstdint>
#include <vector>

#include "hbesso/bytes.hpp"

namespace hbesso::cipher {

inline constexpr std::size_t kBlockSize = 16;

enum class Direction { forward, inverse };

struct StateBlock {
    std::array<std::uint8_t, kBlockSize> bytes{};

    static StateBlock from(ByteView b);  // b must hold exactly 16 bytes

    std::uint8_t& at(int row, int col) { return bytes[static_cast<std::size_t>(col * 4 + row)]; }
    std::uint8_t at(int row, int col) const { return bytes[static_cast<std::size_t>(col * 4 + row)]; }

    using Matrix = std::array<std::array<std::uint8_t, 4>, 4>;  // [row][col]
    Matrix to_matrix() const;
    static StateBlock from_matrix(const Matrix& m);

    friend bool operator==(const StateBlock&, const StateBlock&) = default;
};

enum class KeySize : int { bits128 = 128, bits192 = 192, bits256 = 256 };

inline constexpr int round_count(KeySize k) {
    return k == KeySize::bits128 ? 10 : k == KeySize::bits192 ? 12 : 14;
}

class CipherKey {
public:
    // Throws std::invalid_argument unless material is 16, 24 or 32 bytes.
    explicit CipherKey(ByteView material);

    KeySize size_class() const { return size_; }
    ByteView material() const { return material_; }

private:
    Bytes material_;
    KeySize size_;
};

class KeySchedule {
public:
    KeySchedule(std::vector<std::uint32_t> words, int rounds);

    const std::vector<std::uint32_t>& words() const { return words_; }
    int rounds() const { return rounds_; }

    // Round key i covers words 4i .. 4i+3, serialized big-endian.
    const std::array<std::uint8_t, kBlockSize>& round_key(int round) const;

private:
    std::vector<std::uint32_t> words_;
    int rounds_;
    std::vector<std::array<std::uint8_t, kBlockSize>> round_keys_;
};

struct SBoxTable {
    std::array<std::uint8_t, 256> forward;
    std::array<std::uint8_t, 256> inverse;
};

// Tables are compile-time constants; concurrent use needs no synchronization.
const SBoxTable& sbox();

// GF(2^8) product modulo x^8 + x^4 + x^3 + x + 1.
std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b);

StateBlock sub_bytes(const StateBlock& s, Direction d);
StateBlock shift_rows(const StateBlock& s, Direction d);
StateBlock mix_columns(const StateBlock& s, Direction d);
StateBlock add_round_key(const StateBlock& s, const std::array<std::uint8_t, kBlockSize>& round_key);

KeySchedule expand_key(const CipherKey& key);

StateBlock encrypt_block(const StateBlock& plaintext, const KeySchedule& schedule);
StateBlock decrypt_block(const StateBlock& ciphertext, const KeySchedule& schedule);

// Owns an expanded schedule so callers encrypting many blocks pay for key
// expansion once.
class BlockCipher {
public:
    explicit BlockCipher(const CipherKey& key) : schedule_(expand_key(key)) {}
    explicit BlockCipher(ByteView key) : BlockCipher(CipherKey(key)) {}

    StateBlock encrypt(const StateBlock& p) const { return encrypt_block(p, schedule_); }
    StateBlock decrypt(const StateBlock& c) const { return decrypt_block(c, schedule_); }

    const KeySchedule& schedule() const { return schedule_; }

private:
    KeySchedule schedule_;
};

}  // namespace hbesso::cipher
