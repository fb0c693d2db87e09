#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>

#include "hbesso/bytes.hpp"
#include "hbesso/cipher.hpp"

namespace hbesso {

class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    Bytes bytes(std::size_t n) {
        Bytes b(n);
        fill(b);
        return b;
    }

    template <std::size_t N>
    std::array<std::uint8_t, N> array() {
        std::array<std::uint8_t, N> a{};
        fill(a);
        return a;
    }

    // 128 random bits rendered as 32 lowercase hex digits.
    std::string hex_id() { return to_hex(array<16>()); }
};

// Operating-system CSPRNG.
class SystemRandom final : public RandomSource {
public:
    SystemRandom();
    void fill(std::span<std::uint8_t> out) override;
};

// Reproducible stream for tests and scripted runs: the cipher in counter
// mode under a key expanded from the seed. Thread-safe.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed);
    void fill(std::span<std::uint8_t> out) override;

private:
    std::mutex mu_;
    cipher::BlockCipher cipher_;
    std::uint64_t counter_ = 0;
};

}  // namespace hbesso
