#include "hbesso/random.hpp"

#include <algorithm>
#include <stdexcept>

#include <sodium.h>

namespace hbesso {

SystemRandom::SystemRandom() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
}

void SystemRandom::fill(std::span<std::uint8_t> out) { randombytes_buf(out.data(), out.size()); }

namespace {
std::array<std::uint8_t, 16> seed_key(std::uint64_t seed) {
    std::array<std::uint8_t, 16> k{};
    store_be64(k.data(), seed);
    store_be64(k.data() + 8, 0x5eed5eed5eed5eedULL);
    return k;
}
}  // namespace

SeededRandom::SeededRandom(std::uint64_t seed) : cipher_(seed_key(seed)) {}

void SeededRandom::fill(std::span<std::uint8_t> out) {
    std::lock_guard lock(mu_);
    std::size_t off = 0;
    while (off < out.size()) {
        cipher::StateBlock ctr;
        store_be64(ctr.bytes.data() + 8, counter_++);
        const auto block = cipher_.encrypt(ctr);
        const std::size_t n = std::min(out.size() - off, block.bytes.size());
        std::copy_n(block.bytes.begin(), n, out.begin() + static_cast<std::ptrdiff_t>(off));
        off += n;
    }
}

}  // namespace hbesso
