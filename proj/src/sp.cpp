#include "hbesso/sp.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hbesso/keystore.hpp"
#include "hbesso/url.hpp"

namespace hbesso::sp {

SpConfig load_sp_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FileFormatError(std::string("invalid SP config: ") + e.what(), 0);
    }
    SpConfig c;
    c.entity_id = j.value("entity_id", c.entity_id);
    c.acs_url = j.value("acs_url", c.acs_url);
    c.idp_url = j.value("idp_url", c.idp_url);
    c.federation_key_id = j.value("federation_key_id", std::string{});
    c.clock_skew = Seconds(j.value("clock_skew", c.clock_skew.count()));
    c.session_lifetime = Seconds(j.value("session_lifetime", c.session_lifetime.count()));
    c.pending_window = Seconds(j.value("pending_window", c.pending_window.count()));
    c.listen = j.value("listen", c.listen);

    std::filesystem::path ks = j.value("keystore", std::string("keys.tsv"));
    if (ks.is_relative()) ks = path.parent_path() / ks;
    const auto store = KeyStore::load(ks);
    const auto* key = store.find(c.federation_key_id);
    if (!key) throw FileFormatError("federation key '" + c.federation_key_id + "' not in " + ks.string(), 0);
    c.federation_key = *key;
    return c;
}

bool ReplayCache::check_and_insert(const std::string& id, Timestamp expires_at, Timestamp now) {
    std::lock_guard lock(mu_);
    std::erase_if(entries_, [&](const auto& kv) { return kv.second <= now; });
    return entries_.emplace(id, expires_at).second;
}

std::size_t ReplayCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::string_view to_string(SpReject r) {
    switch (r) {
        case SpReject::unknown_request: return "unknown-request";
        case SpReject::bad_tag: return "bad-tag";
        case SpReject::malformed: return "malformed";
        case SpReject::wrong_audience: return "wrong-audience";
        case SpReject::expired: return "expired";
        case SpReject::not_yet_valid: return "not-yet-valid";
        case SpReject::replayed: return "replayed";
    }
    return "unknown";
}

ServiceProvider::ServiceProvider(SpConfig config, RandomSource& rng) : config_(std::move(config)), rng_(rng) {
    if (config_.federation_key.size() != 16) throw std::invalid_argument("federation key must be 16 bytes");
}

saml::AuthnRequest ServiceProvider::gate(Timestamp now) {
    auto req = saml::build_authn_request(config_.entity_id, config_.acs_url, now, rng_);
    std::lock_guard lock(mu_);
    evict_locked(now);
    pending_.emplace(req.id, Pending{now, false});
    return req;
}

std::string ServiceProvider::redirect_location(const saml::AuthnRequest& request) const {
    return config_.idp_url + "/sso?SAMLRequest=" + url_encode(base64_encode(as_bytes(saml::serialize(request))));
}

Expected<ResourceSession, SpReject> ServiceProvider::consume_response(const saml::SsoResponse& response,
                                                                      Timestamp now) {
    auto reject = [&](SpReject r) {
        spdlog::info("sp: rejected response to {}: {}", response.in_response_to, to_string(r));
        return unexpected(r);
    };

    {
        std::lock_guard lock(mu_);
        evict_locked(now);
        if (!pending_.contains(response.in_response_to)) return reject(SpReject::unknown_request);
    }

    auto assertion = saml::decrypt_validate(response.encrypted_assertion, config_.federation_key, now,
                                            config_.clock_skew, config_.entity_id);
    if (!assertion) {
        switch (assertion.error()) {
            case saml::Reject::bad_tag: return reject(SpReject::bad_tag);
            case saml::Reject::malformed: return reject(SpReject::malformed);
            case saml::Reject::wrong_audience: return reject(SpReject::wrong_audience);
            case saml::Reject::expired: return reject(SpReject::expired);
            case saml::Reject::not_yet_valid: return reject(SpReject::not_yet_valid);
        }
    }

    if (!replay_.check_and_insert(assertion->id, assertion->not_on_or_after + config_.clock_skew, now))
        return reject(SpReject::replayed);

    std::lock_guard lock(mu_);
    auto it = pending_.find(response.in_response_to);
    if (it == pending_.end()) return reject(SpReject::unknown_request);
    // A second, distinct assertion for an already answered request.
    if (it->second.consumed) return reject(SpReject::replayed);
    it->second.consumed = true;

    ResourceSession s{rng_.hex_id(), assertion->subject, now + config_.session_lifetime};
    sessions_.emplace(s.token, s);
    spdlog::info("sp: session for {} via assertion {}", s.subject, assertion->id);
    return s;
}

std::optional<ResourceSession> ServiceProvider::find_session(std::string_view token, Timestamp now) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(std::string(token));
    if (it == sessions_.end() || now >= it->second.expires_at) return std::nullopt;
    return it->second;
}

std::size_t ServiceProvider::pending_requests(Timestamp now) {
    std::lock_guard lock(mu_);
    evict_locked(now);
    return pending_.size();
}

std::optional<Timestamp> ServiceProvider::pending_issue_instant(std::string_view request_id) const {
    std::lock_guard lock(mu_);
    auto it = pending_.find(std::string(request_id));
    if (it == pending_.end()) return std::nullopt;
    return it->second.issue_instant;
}

void ServiceProvider::evict_locked(Timestamp now) {
    std::erase_if(pending_, [&](const auto& kv) { return now >= kv.second.issue_instant + config_.pending_window; });
    std::erase_if(sessions_, [&](const auto& kv) { return now >= kv.second.expires_at; });
}

}  // namespace hbesso::sp
