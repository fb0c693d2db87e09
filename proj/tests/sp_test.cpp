#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <thread>

#include "hbesso/keystore.hpp"
#include "hbesso/sp.hpp"
#include "hbesso/url.hpp"
#include "test_support.hpp"

using namespace hbesso;
using namespace hbesso::sp;

namespace {

const Timestamp kT0 = Timestamp(Seconds(1'800'000'000));
constexpr const char* kSp = "urn:sp:demo";

Bytes fed_key() { return Bytes(16, 0xa5); }

SpConfig make_config() {
    SpConfig c;
    c.entity_id = kSp;
    c.idp_url = "http://idp.test";
    c.federation_key_id = "fed-demo";
    c.federation_key = fed_key();
    return c;
}

// Plays the IdP: an assertion for `subject` answering `request_id`.
saml::SsoResponse respond(std::string_view request_id, std::string_view subject, Timestamp issued,
                          RandomSource& rng, std::string_view audience = kSp, ByteView key = {}) {
    const Bytes k = key.empty() ? fed_key() : to_vector(key);
    auto a = saml::build_assertion("urn:hbesso:idp", subject, audience, issued, Seconds(120), rng);
    return {std::string(request_id), "urn:hbesso:idp", saml::encrypt_assertion(a, k, "fed-demo", rng)};
}

}  // namespace

TEST(Gate, RedirectCarriesDecodableRequest) {
    SeededRandom rng(1);
    ServiceProvider sp(make_config(), rng);
    const auto req = sp.gate(kT0);
    const auto loc = sp.redirect_location(req);
    const std::string prefix = "http://idp.test/sso?SAMLRequest=";
    ASSERT_EQ(loc.rfind(prefix, 0), 0u);
    const auto xml = base64_decode(url_decode(loc.substr(prefix.size())));
    ASSERT_TRUE(xml);
    auto parsed = saml::parse_authn_request(hbesso::to_string(ByteView(*xml)));
    ASSERT_TRUE(parsed);
    EXPECT_EQ(*parsed, req);
    EXPECT_EQ(parsed->sp_entity_id, kSp);
}

TEST(Gate, DistinctIdsAndRecordedInstant) {
    SeededRandom rng(2);
    ServiceProvider sp(make_config(), rng);
    const auto a = sp.gate(kT0);
    const auto b = sp.gate(kT0 + Seconds(3));
    EXPECT_NE(a.id, b.id);
    EXPECT_EQ(sp.pending_issue_instant(a.id), kT0);
    EXPECT_EQ(sp.pending_issue_instant(b.id), kT0 + Seconds(3));
    EXPECT_FALSE(sp.pending_issue_instant("nope"));
}

TEST(Consume, HonestResponseMintsSession) {
    SeededRandom rng(3);
    ServiceProvider sp(make_config(), rng);
    const auto req = sp.gate(kT0);
    auto s = sp.consume_response(respond(req.id, "alice", kT0 + Seconds(1), rng), kT0 + Seconds(2));
    ASSERT_TRUE(s) << to_string(s.error());
    EXPECT_EQ(s->subject, "alice");
    EXPECT_EQ(s->token.size(), 32u);
    EXPECT_EQ(s->expires_at, kT0 + Seconds(2) + Seconds(600));
    auto found = sp.find_session(s->token, kT0 + Seconds(3));
    ASSERT_TRUE(found);
    EXPECT_EQ(found->subject, "alice");
}

TEST(Consume, ReplayRejected) {
    SeededRandom rng(4);
    ServiceProvider sp(make_config(), rng);
    const auto req = sp.gate(kT0);
    const auto resp = respond(req.id, "alice", kT0, rng);
    ASSERT_TRUE(sp.consume_response(resp, kT0 + Seconds(1)));
    auto again = sp.consume_response(resp, kT0 + Seconds(2));
    ASSERT_FALSE(again);
    EXPECT_EQ(again.error(), SpReject::replayed);
}

TEST(Consume, SecondAssertionForSameRequestRejected) {
    SeededRandom rng(5);
    ServiceProvider sp(make_config(), rng);
    const auto req = sp.gate(kT0);
    ASSERT_TRUE(sp.consume_response(respond(req.id, "alice", kT0, rng), kT0));
    auto other = sp.consume_response(respond(req.id, "alice", kT0, rng), kT0);
    ASSERT_FALSE(other);
    EXPECT_EQ(other.error(), SpReject::replayed);
}

TEST(Consume, UnknownRequest) {
    SeededRandom rng(6);
    ServiceProvider sp(make_config(), rng);
    auto r = sp.consume_response(respond("never-issued", "alice", kT0, rng), kT0);
    ASSERT_FALSE(r);
    EXPECT_EQ(r.error(), SpReject::unknown_request);
}

TEST(Consume, ValidationReasonsPropagate) {
    SeededRandom rng(7);
    ServiceProvider sp(make_config(), rng);

    auto tampered = respond(sp.gate(kT0).id, "alice", kT0, rng);
    tampered.encrypted_assertion.sealed.ciphertext[3] ^= 0x01;
    EXPECT_EQ(sp.consume_response(tampered, kT0).error(), SpReject::bad_tag);

    EXPECT_EQ(sp.consume_response(respond(sp.gate(kT0).id, "alice", kT0, rng, "urn:sp:other"), kT0).error(),
              SpReject::wrong_audience);

    // Valid for [kT0, kT0+120); with 30 s skew the last accepted second is kT0+149.
    const auto late = sp.gate(kT0 + Seconds(100)).id;
    EXPECT_EQ(sp.consume_response(respond(late, "alice", kT0, rng), kT0 + Seconds(150)).error(), SpReject::expired);
    const auto early = sp.gate(kT0).id;
    EXPECT_EQ(sp.consume_response(respond(early, "alice", kT0 + Seconds(31), rng), kT0).error(),
              SpReject::not_yet_valid);

    EXPECT_EQ(sp.consume_response(respond(sp.gate(kT0).id, "alice", kT0, rng, kSp, Bytes(16, 1)), kT0).error(),
              SpReject::bad_tag);
}

TEST(Consume, ExpiredWinsOverReplayed) {
    SeededRandom rng(8);
    ServiceProvider sp(make_config(), rng);
    const auto req = sp.gate(kT0);
    const auto resp = respond(req.id, "alice", kT0, rng);
    ASSERT_TRUE(sp.consume_response(resp, kT0));
    auto r = sp.consume_response(resp, kT0 + Seconds(200));
    ASSERT_FALSE(r);
    EXPECT_EQ(r.error(), SpReject::expired);
}

TEST(Consume, RejectedResponsesDoNotPoisonReplayCache) {
    SeededRandom rng(9);
    ServiceProvider sp(make_config(), rng);
    for (int i = 0; i < 50; ++i) {
        auto resp = respond(sp.gate(kT0).id, "alice", kT0, rng);
        resp.encrypted_assertion.sealed.tag.bytes[0] ^= 0x80;
        EXPECT_FALSE(sp.consume_response(resp, kT0));
    }
    EXPECT_EQ(sp.replay_cache().size(), 0u);
}

TEST(Consume, ConcurrentReplayAdmitsOne) {
    SystemRandom rng;
    for (int round = 0; round < 20; ++round) {
        ServiceProvider sp(make_config(), rng);
        const auto resp = respond(sp.gate(kT0).id, "alice", kT0, rng);
        std::atomic<int> sessions{0}, replayed{0};
        std::vector<std::thread> threads;
        for (int i = 0; i < 32; ++i)
            threads.emplace_back([&] {
                auto r = sp.consume_response(resp, kT0 + Seconds(1));
                if (r)
                    ++sessions;
                else if (r.error() == SpReject::replayed)
                    ++replayed;
            });
        for (auto& t : threads) t.join();
        EXPECT_EQ(sessions.load(), 1);
        EXPECT_EQ(replayed.load(), 31);
    }
}

TEST(ReplayCache, EntryHeldUntilExpiry) {
    ReplayCache c;
    EXPECT_TRUE(c.check_and_insert("a", kT0 + Seconds(10), kT0));
    EXPECT_FALSE(c.check_and_insert("a", kT0 + Seconds(10), kT0 + Seconds(9)));
    EXPECT_TRUE(c.check_and_insert("b", kT0 + Seconds(30), kT0 + Seconds(10)));
    EXPECT_EQ(c.size(), 1u);  // "a" evicted at its expiry
}

TEST(Session, ExpiredAndForgedTokensRefused) {
    SeededRandom rng(10);
    ServiceProvider sp(make_config(), rng);
    auto s = sp.consume_response(respond(sp.gate(kT0).id, "alice", kT0, rng), kT0);
    ASSERT_TRUE(s);
    EXPECT_TRUE(sp.find_session(s->token, s->expires_at - Seconds(1)));
    EXPECT_FALSE(sp.find_session(s->token, s->expires_at));

    SystemRandom forge;
    int accepted = 0;
    for (int i = 0; i < 1000; ++i)
        if (sp.find_session(forge.hex_id(), kT0)) ++accepted;
    EXPECT_EQ(accepted, 0);
    EXPECT_FALSE(sp.find_session("", kT0));
}

TEST(Pending, EvictedAfterWindow) {
    SeededRandom rng(11);
    ServiceProvider sp(make_config(), rng);
    for (int i = 0; i < 100; ++i) sp.gate(kT0 + Seconds(i));
    EXPECT_EQ(sp.pending_requests(kT0 + Seconds(299)), 100u);
    EXPECT_EQ(sp.pending_requests(kT0 + Seconds(350)), 49u);
    EXPECT_EQ(sp.pending_requests(kT0 + Seconds(400)), 0u);
}

TEST(Pending, ResponseToEvictedRequestIsUnknown) {
    SeededRandom rng(12);
    ServiceProvider sp(make_config(), rng);
    const auto req = sp.gate(kT0);
    auto r = sp.consume_response(respond(req.id, "alice", kT0 + Seconds(300), rng), kT0 + Seconds(300));
    ASSERT_FALSE(r);
    EXPECT_EQ(r.error(), SpReject::unknown_request);
}

TEST(Config, LoadsKeyFromStore) {
    TempDir dir;
    write_file_atomic(dir / "keys.tsv", "fed-demo\t" + base64_encode(fed_key()) + "\n");
    write_file_atomic(dir / "sp.json", R"({"entity_id": "urn:sp:demo", "federation_key_id": "fed-demo",
        "keystore": "keys.tsv", "clock_skew": 45})");
    const auto c = load_sp_config(dir / "sp.json");
    EXPECT_EQ(c.federation_key, fed_key());
    EXPECT_EQ(c.clock_skew, Seconds(45));
    EXPECT_EQ(c.pending_window, Seconds(300));

    write_file_atomic(dir / "bad.json", R"({"federation_key_id": "missing", "keystore": "keys.tsv"})");
    EXPECT_THROW(load_sp_config(dir / "bad.json"), FileFormatError);
}
