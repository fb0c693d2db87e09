#pragma once

// Key exchange protocol: PIN-derived long-term keys, challenge-response
// authentication, session-key transport, and the encrypt-then-MAC
// composition every higher layer uses to protect payloads.

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "hbesso/bytes.hpp"
#include "hbesso/cipher.hpp"
#include "hbesso/clock.hpp"
#include "hbesso/poly_mac.hpp"
#include "hbesso/random.hpp"

namespace hbesso::kep {

inline constexpr std::size_t kKeySize = 16;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kSaltSize = 16;
inline constexpr std::size_t kMaxPinSize = 16;
inline constexpr int kDefaultKdfIterations = 10'000;
inline constexpr Seconds kDefaultChallengeExpiry{60};

using Nonce = std::array<std::uint8_t, kNonceSize>;
using Salt = std::array<std::uint8_t, kSaltSize>;

struct LongTermKey {
    std::array<std::uint8_t, kKeySize> k{};
    friend bool operator==(const LongTermKey&, const LongTermKey&) = default;
};

struct SessionKey {
    std::array<std::uint8_t, kKeySize> k{};
    Timestamp issued_at{};
    Seconds lifetime{0};
    friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

struct SealedPayload {
    std::string key_id;
    Nonce nonce{};
    Bytes ciphertext;
    mac::MacTag tag;
    friend bool operator==(const SealedPayload&, const SealedPayload&) = default;
};

// base64(key-id-len:1 | key-id | nonce:12 | tag:16 | ciphertext)
std::string encode_wire(const SealedPayload& p);
std::optional<SealedPayload> decode_wire(std::string_view text);

// X0 = salt; X(i+1) = E_pin(Xi) ^ Xi, with the PIN padded to a cipher key by
// 0x80 and zeros. Throws std::invalid_argument for an empty PIN, a PIN over
// 16 bytes, or iterations < 1.
LongTermKey derive_long_term_key(ByteView pin, const Salt& salt, int iterations);

// E_key(nonce | be32(counter))
cipher::StateBlock counter_block(const cipher::BlockCipher& c, const Nonce& nonce, std::uint32_t counter);

// r = clamp(E(nonce|0)), s = E(nonce|1)
mac::MacKey derive_mac_key(const cipher::BlockCipher& c, const Nonce& nonce);

// XORs `in` with the keystream E(nonce | be32(2)), E(nonce | be32(3)), ...
// into `out`, which must hold in.size() bytes.
void ctr_transform(const cipher::BlockCipher& c, const Nonce& nonce, ByteView in, std::uint8_t* out);

// Counter-mode encryption from block 2 onward, then a poly MAC over
// aad | nonce | ciphertext | be64(len aad) | be64(len ciphertext).
// The returned payload has an empty key id.
SealedPayload seal(const cipher::BlockCipher& key, const Nonce& nonce, ByteView plaintext, ByteView aad);
SealedPayload seal(ByteView key, const Nonce& nonce, ByteView plaintext, ByteView aad);

// Verifies before decrypting; nullopt on any failure and nothing else.
std::optional<Bytes> open(const cipher::BlockCipher& key, const SealedPayload& payload, ByteView aad);
std::optional<Bytes> open(ByteView key, const SealedPayload& payload, ByteView aad);

// As seal/open, but the key id is authenticated too: it is prefixed
// (length byte, then the id) to the caller's aad.
SealedPayload seal_payload(ByteView key, std::string_view key_id, const Nonce& nonce, ByteView plaintext,
                           ByteView aad);
std::optional<Bytes> open_payload(ByteView key, const SealedPayload& payload, ByteView aad);

Nonce random_nonce(RandomSource& rng);

struct Challenge {
    std::string id;  // 32 hex digits
    std::string user_id;
    std::array<std::uint8_t, 16> nonce{};
    Timestamp issued_at{};
    Timestamp expires_at{};
};

mac::MacTag answer_challenge(const LongTermKey& ltk, const Challenge& ch);
bool verify_challenge(const LongTermKey& ltk, const Challenge& ch, const mac::MacTag& answer);

enum class ChallengeVerdict { accept, reject_auth, reject_expired, reject_replay };
std::string_view to_string(ChallengeVerdict v);

// Outstanding challenges. Verification consumes a challenge atomically, so
// concurrent attempts on one challenge produce at most one accept.
class ChallengeTable {
public:
    explicit ChallengeTable(Seconds expiry = kDefaultChallengeExpiry) : expiry_(expiry) {}

    Challenge issue(std::string_view user_id, Timestamp now, RandomSource& rng);

    // `ltk` is empty when the user is unknown; such challenges always fail
    // with reject_auth.
    ChallengeVerdict verify(std::string_view challenge_id, std::string_view user_id,
                            const std::optional<LongTermKey>& ltk, const mac::MacTag& answer, Timestamp now);

    std::size_t outstanding() const;

private:
    void evict(Timestamp now);

    struct Entry {
        Challenge challenge;
        bool spent = false;
    };

    Seconds expiry_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, Entry> entries_;
};

SealedPayload wrap_session_key(const LongTermKey& ltk, std::string_view user_id, const SessionKey& sk,
                               RandomSource& rng);
std::optional<SessionKey> unwrap_session_key(const LongTermKey& ltk, std::string_view user_id,
                                             const SealedPayload& payload);

}  // namespace hbesso::kep
