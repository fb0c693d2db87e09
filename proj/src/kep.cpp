#include "hbesso/kep.hpp"

#include <algorithm>
#include <stdexcept>

namespace hbesso::kep {

namespace {

constexpr std::uint32_t kMacCounterR = 0;
constexpr std::uint32_t kMacCounterS = 1;
constexpr std::uint32_t kFirstDataCounter = 2;

Bytes mac_input(ByteView aad, const Nonce& nonce, ByteView ciphertext) {
    Bytes m;
    m.reserve(aad.size() + nonce.size() + ciphertext.size() + 16);
    m.insert(m.end(), aad.begin(), aad.end());
    m.insert(m.end(), nonce.begin(), nonce.end());
    m.insert(m.end(), ciphertext.begin(), ciphertext.end());
    std::uint8_t lens[16];
    store_be64(lens, aad.size());
    store_be64(lens + 8, ciphertext.size());
    m.insert(m.end(), lens, lens + 16);
    return m;
}

void apply_keystream(const cipher::BlockCipher& c, const Nonce& nonce, ByteView in, std::uint8_t* out) {
    std::uint32_t ctr = kFirstDataCounter;
    for (std::size_t off = 0; off < in.size(); off += cipher::kBlockSize, ++ctr) {
        const auto ks = counter_block(c, nonce, ctr);
        const std::size_t n = std::min(cipher::kBlockSize, in.size() - off);
        for (std::size_t i = 0; i < n; ++i) out[off + i] = in[off + i] ^ ks.bytes[i];
    }
}

Bytes bound_aad(std::string_view key_id, ByteView aad) {
    if (key_id.size() > 255) throw std::invalid_argument("key id longer than 255 bytes");
    Bytes out;
    out.reserve(1 + key_id.size() + aad.size());
    out.push_back(static_cast<std::uint8_t>(key_id.size()));
    out.insert(out.end(), key_id.begin(), key_id.end());
    out.insert(out.end(), aad.begin(), aad.end());
    return out;
}

Bytes challenge_message(const Challenge& ch) {
    Bytes m(ch.user_id.begin(), ch.user_id.end());
    m.push_back(0x00);
    m.insert(m.end(), ch.nonce.begin(), ch.nonce.end());
    return m;
}

mac::MacKey challenge_mac_key(const LongTermKey& ltk, const Challenge& ch) {
    Nonce n{};
    std::copy_n(ch.nonce.begin(), kNonceSize, n.begin());
    return derive_mac_key(cipher::BlockCipher(ltk.k), n);
}

}  // namespace

void ctr_transform(const cipher::BlockCipher& c, const Nonce& nonce, ByteView in, std::uint8_t* out) {
    apply_keystream(c, nonce, in, out);
}

std::string encode_wire(const SealedPayload& p) {
    if (p.key_id.size() > 255) throw std::invalid_argument("key id longer than 255 bytes");
    Bytes raw;
    raw.reserve(1 + p.key_id.size() + kNonceSize + mac::kTagSize + p.ciphertext.size());
    raw.push_back(static_cast<std::uint8_t>(p.key_id.size()));
    raw.insert(raw.end(), p.key_id.begin(), p.key_id.end());
    raw.insert(raw.end(), p.nonce.begin(), p.nonce.end());
    raw.insert(raw.end(), p.tag.bytes.begin(), p.tag.bytes.end());
    raw.insert(raw.end(), p.ciphertext.begin(), p.ciphertext.end());
    return base64_encode(raw);
}

std::optional<SealedPayload> decode_wire(std::string_view text) {
    const auto raw = base64_decode(text);
    if (!raw || raw->empty()) return std::nullopt;
    const std::size_t id_len = (*raw)[0];
    if (raw->size() < 1 + id_len + kNonceSize + mac::kTagSize) return std::nullopt;
    SealedPayload p;
    auto it = raw->begin() + 1;
    p.key_id.assign(it, it + static_cast<std::ptrdiff_t>(id_len));
    it += static_cast<std::ptrdiff_t>(id_len);
    std::copy_n(it, kNonceSize, p.nonce.begin());
    it += kNonceSize;
    std::copy_n(it, mac::kTagSize, p.tag.bytes.begin());
    it += mac::kTagSize;
    p.ciphertext.assign(it, raw->end());
    return p;
}

LongTermKey derive_long_term_key(ByteView pin, const Salt& salt, int iterations) {
    if (pin.empty() || pin.size() > kMaxPinSize) throw std::invalid_argument("PIN must be 1 to 16 bytes");
    if (iterations < 1) throw std::invalid_argument("KDF iterations must be at least 1");

    std::array<std::uint8_t, kKeySize> padded{};
    std::copy(pin.begin(), pin.end(), padded.begin());
    if (pin.size() < kKeySize) padded[pin.size()] = 0x80;
    const cipher::BlockCipher c{ByteView(padded)};

    cipher::StateBlock x;
    std::copy(salt.begin(), salt.end(), x.bytes.begin());
    for (int i = 0; i < iterations; ++i) {
        const auto e = c.encrypt(x);
        for (std::size_t j = 0; j < cipher::kBlockSize; ++j) x.bytes[j] ^= e.bytes[j];
    }
    LongTermKey ltk;
    ltk.k = x.bytes;
    return ltk;
}

cipher::StateBlock counter_block(const cipher::BlockCipher& c, const Nonce& nonce, std::uint32_t counter) {
    cipher::StateBlock in;
    std::copy(nonce.begin(), nonce.end(), in.bytes.begin());
    store_be32(in.bytes.data() + kNonceSize, counter);
    return c.encrypt(in);
}

mac::MacKey derive_mac_key(const cipher::BlockCipher& c, const Nonce& nonce) {
    const auto r = counter_block(c, nonce, kMacCounterR);
    const auto s = counter_block(c, nonce, kMacCounterS);
    return mac::MacKey::from(r.bytes, s.bytes);
}

SealedPayload seal(const cipher::BlockCipher& key, const Nonce& nonce, ByteView plaintext, ByteView aad) {
    SealedPayload p;
    p.nonce = nonce;
    p.ciphertext.resize(plaintext.size());
    apply_keystream(key, nonce, plaintext, p.ciphertext.data());
    p.tag = mac::mac_compute(derive_mac_key(key, nonce), mac_input(aad, nonce, p.ciphertext));
    return p;
}

SealedPayload seal(ByteView key, const Nonce& nonce, ByteView plaintext, ByteView aad) {
    return seal(cipher::BlockCipher(key), nonce, plaintext, aad);
}

std::optional<Bytes> open(const cipher::BlockCipher& key, const SealedPayload& payload, ByteView aad) {
    const auto mk = derive_mac_key(key, payload.nonce);
    if (!mac::mac_verify(mk, mac_input(aad, payload.nonce, payload.ciphertext), payload.tag))
        return std::nullopt;
    Bytes plain(payload.ciphertext.size());
    apply_keystream(key, payload.nonce, payload.ciphertext, plain.data());
    return plain;
}

std::optional<Bytes> open(ByteView key, const SealedPayload& payload, ByteView aad) {
    return open(cipher::BlockCipher(key), payload, aad);
}

SealedPayload seal_payload(ByteView key, std::string_view key_id, const Nonce& nonce, ByteView plaintext,
                           ByteView aad) {
    auto p = seal(key, nonce, plaintext, bound_aad(key_id, aad));
    p.key_id = std::string(key_id);
    return p;
}

std::optional<Bytes> open_payload(ByteView key, const SealedPayload& payload, ByteView aad) {
    return open(key, payload, bound_aad(payload.key_id, aad));
}

Nonce random_nonce(RandomSource& rng) { return rng.array<kNonceSize>(); }

mac::MacTag answer_challenge(const LongTermKey& ltk, const Challenge& ch) {
    return mac::mac_compute(challenge_mac_key(ltk, ch), challenge_message(ch));
}

bool verify_challenge(const LongTermKey& ltk, const Challenge& ch, const mac::MacTag& answer) {
    return mac::mac_verify(challenge_mac_key(ltk, ch), challenge_message(ch), answer);
}

std::string_view to_string(ChallengeVerdict v) {
    switch (v) {
        case ChallengeVerdict::accept: return "accept";
        case ChallengeVerdict::reject_auth: return "reject-auth";
        case ChallengeVerdict::reject_expired: return "reject-expired";
        case ChallengeVerdict::reject_replay: return "reject-replay";
    }
    return "unknown";
}

Challenge ChallengeTable::issue(std::string_view user_id, Timestamp now, RandomSource& rng) {
    Challenge ch;
    ch.id = rng.hex_id();
    ch.user_id = std::string(user_id);
    ch.nonce = rng.array<16>();
    ch.issued_at = now;
    ch.expires_at = now + expiry_;

    std::lock_guard lock(mu_);
    evict(now);
    entries_.emplace(ch.id, Entry{ch, false});
    return ch;
}

ChallengeVerdict ChallengeTable::verify(std::string_view challenge_id, std::string_view user_id,
                                        const std::optional<LongTermKey>& ltk, const mac::MacTag& answer,
                                        Timestamp now) {
    Challenge ch;
    {
        std::lock_guard lock(mu_);
        auto it = entries_.find(std::string(challenge_id));
        if (it == entries_.end()) return ChallengeVerdict::reject_auth;
        if (it->second.spent) return ChallengeVerdict::reject_replay;
        it->second.spent = true;
        ch = it->second.challenge;
    }
    if (now >= ch.expires_at) return ChallengeVerdict::reject_expired;
    if (!ltk || ch.user_id != user_id) return ChallengeVerdict::reject_auth;
    return verify_challenge(*ltk, ch, answer) ? ChallengeVerdict::accept : ChallengeVerdict::reject_auth;
}

std::size_t ChallengeTable::outstanding() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

void ChallengeTable::evict(Timestamp now) {
    // Spent ids linger for one more window so late replays still read as
    // replays rather than unknown challenges.
    std::erase_if(entries_, [&](const auto& kv) { return now >= kv.second.challenge.expires_at + expiry_; });
}

SealedPayload wrap_session_key(const LongTermKey& ltk, std::string_view user_id, const SessionKey& sk,
                               RandomSource& rng) {
    std::array<std::uint8_t, kKeySize + 16> plain{};
    std::copy(sk.k.begin(), sk.k.end(), plain.begin());
    store_be64(plain.data() + kKeySize, static_cast<std::uint64_t>(sk.issued_at.time_since_epoch().count()));
    store_be64(plain.data() + kKeySize + 8, static_cast<std::uint64_t>(sk.lifetime.count()));
    return seal_payload(ltk.k, "ltk", random_nonce(rng), plain, as_bytes(user_id));
}

std::optional<SessionKey> unwrap_session_key(const LongTermKey& ltk, std::string_view user_id,
                                             const SealedPayload& payload) {
    const auto plain = open_payload(ltk.k, payload, as_bytes(user_id));
    if (!plain || plain->size() != kKeySize + 16) return std::nullopt;
    SessionKey sk;
    std::copy_n(plain->begin(), kKeySize, sk.k.begin());
    auto be64 = [&](std::size_t off) {
        return (std::uint64_t{load_be32(plain->data() + off)} << 32) | load_be32(plain->data() + off + 4);
    };
    sk.issued_at = Timestamp(Seconds(static_cast<std::int64_t>(be64(kKeySize))));
    sk.lifetime = Seconds(static_cast<std::int64_t>(be64(kKeySize + 8)));
    return sk;
}

}  // namespace hbesso::kep
