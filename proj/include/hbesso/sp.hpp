#pragma once

// Service provider: gates a resource behind SSO, consumes encrypted
// assertions with replay protection, and hands out bearer sessions.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "hbesso/clock.hpp"
#include "hbesso/expected.hpp"
#include "hbesso/random.hpp"
#include "hbesso/saml.hpp"

namespace hbesso::sp {

struct SpConfig {
    std::string entity_id = "urn:hbesso:sp";
    std::string acs_url = "http://127.0.0.1:8082/acs";
    std::string idp_url = "http://127.0.0.1:8081";
    std::string federation_key_id;
    Bytes federation_key;
    Seconds clock_skew = saml::kDefaultClockSkew;
    Seconds session_lifetime{600};
    Seconds pending_window{300};
    std::string listen = "127.0.0.1:8082";
};

// JSON file naming a key store; the federation key is read from it.
SpConfig load_sp_config(const std::filesystem::path& path);

// Consumed assertion ids. An id stays until its expiry, after which the
// validity window alone rejects the assertion.
class ReplayCache {
public:
    // True when `id` was absent (and is now recorded); false for a replay.
    bool check_and_insert(const std::string& id, Timestamp expires_at, Timestamp now);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, Timestamp> entries_;
};

struct ResourceSession {
    std::string token;  // 32 hex digits
    std::string subject;
    Timestamp expires_at{};
};

enum class SpReject { unknown_request, bad_tag, malformed, wrong_audience, expired, not_yet_valid, replayed };
std::string_view to_string(SpReject r);

class ServiceProvider {
public:
    ServiceProvider(SpConfig config, RandomSource& rng);

    const SpConfig& config() const { return config_; }

    // Records a fresh pending request.
    saml::AuthnRequest gate(Timestamp now);

    // idp_url + "/sso?SAMLRequest=" + urlencoded base64 of the request XML.
    std::string redirect_location(const saml::AuthnRequest& request) const;

    // Order: pending request, assertion validation, replay check, then the
    // session is minted. Concurrent calls with one assertion mint at most
    // one session.
    Expected<ResourceSession, SpReject> consume_response(const saml::SsoResponse& response, Timestamp now);

    std::optional<ResourceSession> find_session(std::string_view token, Timestamp now) const;

    std::size_t pending_requests(Timestamp now);
    std::optional<Timestamp> pending_issue_instant(std::string_view request_id) const;
    const ReplayCache& replay_cache() const { return replay_; }

private:
    struct Pending {
        Timestamp issue_instant;
        bool consumed = false;
    };
    void evict_locked(Timestamp now);

    SpConfig config_;
    RandomSource& rng_;
    ReplayCache replay_;

    mutable std::mutex mu_;
    std::unordered_map<std::string, Pending> pending_;
    std::unordered_map<std::string, ResourceSession> sessions_;
};

}  // namespace hbesso::sp
