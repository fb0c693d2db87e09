#pragma once

// Identity provider: user directory, PIN registration, challenge-response
// login and encrypted assertion issuance.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>

#include "hbesso/clock.hpp"
#include "hbesso/expected.hpp"
#include "hbesso/kep.hpp"
#include "hbesso/keystore.hpp"
#include "hbesso/random.hpp"
#include "hbesso/saml.hpp"

namespace hbesso::idp {

struct UserRecord {
    std::string user_id;
    kep::Salt salt{};
    kep::SealedPayload wrapped_ltk;  // sealed under the IdP master key, aad = user id
    Timestamp created_at{};

    friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

// One tab-separated record per line:
//   user-id  base64(salt)  sealed-ltk wire encoding  created-at (RFC 3339)
class Directory {
public:
    const UserRecord* find(std::string_view user_id) const;
    bool contains(std::string_view user_id) const { return find(user_id) != nullptr; }
    bool salt_in_use(const kep::Salt& salt) const;
    void insert(UserRecord r);
    void erase(std::string_view user_id);
    std::size_t size() const { return users_.size(); }

    std::string to_text() const;
    // Throws FileFormatError naming the first bad line; nothing is loaded.
    static Directory from_text(std::string_view text);

    friend bool operator==(const Directory&, const Directory&) = default;

private:
    std::map<std::string, UserRecord, std::less<>> users_;
};

void persist_directory(const Directory& d, const std::filesystem::path& path);
Directory load_directory(const std::filesystem::path& path);

struct IdpConfig {
    std::string entity_id = "urn:hbesso:idp";
    std::string master_key_id = "idp-master";
    std::map<std::string, std::string> federation;  // SP entity id -> key id
    Seconds assertion_lifetime{120};
    Seconds challenge_expiry = kep::kDefaultChallengeExpiry;
    Seconds session_key_lifetime{3600};
    int kdf_iterations = kep::kDefaultKdfIterations;
    std::string listen = "127.0.0.1:8081";
    std::filesystem::path keystore_path;
    std::filesystem::path directory_path;
};

// JSON file; relative paths resolve against the config file's directory.
IdpConfig load_idp_config(const std::filesystem::path& path);

enum class IdpError {
    duplicate_user,
    invalid_user,  // empty, longer than 64 bytes, or containing control characters
    invalid_pin,
    unknown_user,
    unknown_sp,
    reject_auth,
    reject_expired,
    reject_replay,
    storage_failure,
};
std::string_view to_string(IdpError e);

struct ChallengeOffer {
    kep::Challenge challenge;
    kep::Salt salt{};
    int iterations = 0;
};

struct IssuedResponse {
    saml::SsoResponse response;
    std::string assertion_id;
    kep::SealedPayload wrapped_session_key;
};

class IdentityProvider {
public:
    // Throws std::invalid_argument when a referenced key id is missing from
    // the key store.
    IdentityProvider(IdpConfig config, KeyStore keys, Directory directory, RandomSource& rng);

    const IdpConfig& config() const { return config_; }

    // Persists the directory (when a path is configured) before returning.
    Expected<UserRecord, IdpError> register_user(std::string_view user_id, std::string_view pin, Timestamp now);

    // Unknown users get a well-formed decoy that can never verify.
    ChallengeOffer issue_challenge(std::string_view user_id, Timestamp now);

    Expected<IssuedResponse, IdpError> complete_authn(std::string_view user_id, const saml::AuthnRequest& request,
                                                      std::string_view challenge_id, const mac::MacTag& answer,
                                                      Timestamp now);

    Directory directory_snapshot() const;

private:
    std::optional<kep::LongTermKey> unwrap_ltk(const UserRecord& r) const;

    IdpConfig config_;
    KeyStore keys_;
    const Bytes* master_key_;
    RandomSource& rng_;
    kep::ChallengeTable challenges_;

    mutable std::mutex mu_;  // guards directory_ and issued_ids_
    Directory directory_;
    std::unordered_set<std::string> issued_ids_;
};

}  // namespace hbesso::idp
