#include "hbesso/idp.hpp"

#include <sstream>

#include <json.hpp>

namespace hbesso::idp {

namespace {

bool valid_user_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    for (unsigned char c : id)
        if (c < 0x20 || c == 0x7f) return false;
    return true;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

}  // namespace

const UserRecord* Directory::find(std::string_view user_id) const {
    auto it = users_.find(user_id);
    return it == users_.end() ? nullptr : &it->second;
}

bool Directory::salt_in_use(const kep::Salt& salt) const {
    for (const auto& [_, r] : users_)
        if (r.salt == salt) return true;
    return false;
}

void Directory::insert(UserRecord r) {
    auto id = r.user_id;
    users_.insert_or_assign(std::move(id), std::move(r));
}

void Directory::erase(std::string_view user_id) {
    auto it = users_.find(user_id);
    if (it != users_.end()) users_.erase(it);
}

std::string Directory::to_text() const {
    std::string out;
    for (const auto& [id, r] : users_) {
        out += id;
        out += '\t';
        out += base64_encode(r.salt);
        out += '\t';
        out += kep::encode_wire(r.wrapped_ltk);
        out += '\t';
        out += format_rfc3339(r.created_at);
        out += '\n';
    }
    return out;
}

Directory Directory::from_text(std::string_view text) {
    Directory d;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lineno;

        const auto fields = split_tabs(line);
        if (fields.size() != 4) throw FileFormatError("expected 4 tab-separated fields", lineno);
        UserRecord r;
        r.user_id = std::string(fields[0]);
        if (!valid_user_id(r.user_id)) throw FileFormatError("invalid user id", lineno);
        const auto salt = base64_decode(fields[1]);
        if (!salt || salt->size() != kep::kSaltSize) throw FileFormatError("invalid salt", lineno);
        std::copy(salt->begin(), salt->end(), r.salt.begin());
        auto wrapped = kep::decode_wire(fields[2]);
        if (!wrapped) throw FileFormatError("invalid sealed key", lineno);
        r.wrapped_ltk = std::move(*wrapped);
        const auto created = parse_rfc3339(fields[3]);
        if (!created) throw FileFormatError("invalid timestamp", lineno);
        r.created_at = *created;
        if (d.contains(r.user_id)) throw FileFormatError("duplicate user id", lineno);
        d.insert(std::move(r));
    }
    return d;
}

void persist_directory(const Directory& d, const std::filesystem::path& path) {
    write_file_atomic(path, d.to_text());
}

Directory load_directory(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return Directory::from_text(read_file(path));
}

IdpConfig load_idp_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FileFormatError(std::string("invalid IdP config: ") + e.what(), 0);
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    IdpConfig c;
    c.entity_id = j.value("entity_id", c.entity_id);
    c.master_key_id = j.value("master_key_id", c.master_key_id);
    if (j.contains("federation"))
        for (const auto& [sp, key_id] : j["federation"].items()) c.federation[sp] = key_id.get<std::string>();
    c.assertion_lifetime = Seconds(j.value("assertion_lifetime", c.assertion_lifetime.count()));
    c.challenge_expiry = Seconds(j.value("challenge_expiry", c.challenge_expiry.count()));
    c.session_key_lifetime = Seconds(j.value("session_key_lifetime", c.session_key_lifetime.count()));
    c.kdf_iterations = j.value("kdf_iterations", c.kdf_iterations);
    c.listen = j.value("listen", c.listen);
    c.keystore_path = resolve(j.value("keystore", std::string("keys.tsv")));
    if (j.contains("directory")) c.directory_path = resolve(j["directory"].get<std::string>());
    return c;
}

std::string_view to_string(IdpError e) {
    switch (e) {
        case IdpError::duplicate_user: return "duplicate-user";
        case IdpError::invalid_user: return "invalid-user";
        case IdpError::invalid_pin: return "invalid-pin";
        case IdpError::unknown_user: return "unknown-user";
        case IdpError::unknown_sp: return "unknown-sp";
        case IdpError::reject_auth: return "reject-auth";
        case IdpError::reject_expired: return "reject-expired";
        case IdpError::reject_replay: return "reject-replay";
        case IdpError::storage_failure: return "storage-failure";
    }
    return "unknown";
}

IdentityProvider::IdentityProvider(IdpConfig config, KeyStore keys, Directory directory, RandomSource& rng)
    : config_(std::move(config)),
      keys_(std::move(keys)),
      master_key_(keys_.find(config_.master_key_id)),
      rng_(rng),
      challenges_(config_.challenge_expiry),
      directory_(std::move(directory)) {
    if (!master_key_) throw std::invalid_argument("master key '" + config_.master_key_id + "' not in key store");
    for (const auto& [sp, key_id] : config_.federation)
        if (!keys_.contains(key_id))
            throw std::invalid_argument("federation key '" + key_id + "' for " + sp + " not in key store");
    if (config_.kdf_iterations < 1) throw std::invalid_argument("kdf_iterations must be at least 1");
}

Expected<UserRecord, IdpError> IdentityProvider::register_user(std::string_view user_id, std::string_view pin,
                                                               Timestamp now) {
    if (!valid_user_id(user_id)) return unexpected(IdpError::invalid_user);
    if (pin.empty() || pin.size() > kep::kMaxPinSize) return unexpected(IdpError::invalid_pin);

    std::lock_guard lock(mu_);
    if (directory_.contains(user_id)) return unexpected(IdpError::duplicate_user);

    UserRecord r;
    r.user_id = std::string(user_id);
    do {
        r.salt = rng_.array<kep::kSaltSize>();
    } while (directory_.salt_in_use(r.salt));
    const auto ltk = kep::derive_long_term_key(as_bytes(pin), r.salt, config_.kdf_iterations);
    r.wrapped_ltk = kep::seal_payload(*master_key_, config_.master_key_id, kep::random_nonce(rng_), ltk.k,
                                      as_bytes(user_id));
    r.created_at = now;

    directory_.insert(r);
    if (!config_.directory_path.empty()) {
        try {
            persist_directory(directory_, config_.directory_path);
        } catch (const std::exception&) {
            directory_.erase(user_id);
            return unexpected(IdpError::storage_failure);
        }
    }
    return r;
}

ChallengeOffer IdentityProvider::issue_challenge(std::string_view user_id, Timestamp now) {
    ChallengeOffer offer;
    offer.iterations = config_.kdf_iterations;
    {
        std::lock_guard lock(mu_);
        if (const auto* r = directory_.find(user_id))
            offer.salt = r->salt;
        else
            offer.salt = rng_.array<kep::kSaltSize>();
    }
    offer.challenge = challenges_.issue(user_id, now, rng_);
    return offer;
}

std::optional<kep::LongTermKey> IdentityProvider::unwrap_ltk(const UserRecord& r) const {
    const auto plain = kep::open_payload(*master_key_, r.wrapped_ltk, as_bytes(r.user_id));
    if (!plain || plain->size() != kep::kKeySize) return std::nullopt;
    kep::LongTermKey ltk;
    std::copy(plain->begin(), plain->end(), ltk.k.begin());
    return ltk;
}

Expected<IssuedResponse, IdpError> IdentityProvider::complete_authn(std::string_view user_id,
                                                                    const saml::AuthnRequest& request,
                                                                    std::string_view challenge_id,
                                                                    const mac::MacTag& answer, Timestamp now) {
    const auto fed = config_.federation.find(request.sp_entity_id);
    if (fed == config_.federation.end()) return unexpected(IdpError::unknown_sp);

    std::optional<kep::LongTermKey> ltk;
    {
        std::lock_guard lock(mu_);
        if (const auto* r = directory_.find(user_id)) ltk = unwrap_ltk(*r);
    }
    switch (challenges_.verify(challenge_id, user_id, ltk, answer, now)) {
        case kep::ChallengeVerdict::accept: break;
        case kep::ChallengeVerdict::reject_auth: return unexpected(IdpError::reject_auth);
        case kep::ChallengeVerdict::reject_expired: return unexpected(IdpError::reject_expired);
        case kep::ChallengeVerdict::reject_replay: return unexpected(IdpError::reject_replay);
    }

    saml::Assertion assertion;
    {
        std::lock_guard lock(mu_);
        do {
            assertion = saml::build_assertion(config_.entity_id, user_id, request.sp_entity_id, now,
                                              config_.assertion_lifetime, rng_);
        } while (!issued_ids_.insert(assertion.id).second);
    }

    IssuedResponse out;
    out.assertion_id = assertion.id;
    out.response.in_response_to = request.id;
    out.response.issuer = config_.entity_id;
    out.response.encrypted_assertion =
        saml::encrypt_assertion(assertion, *keys_.find(fed->second), fed->second, rng_);

    kep::SessionKey sk{rng_.array<kep::kKeySize>(), now, config_.session_key_lifetime};
    out.wrapped_session_key = kep::wrap_session_key(*ltk, user_id, sk, rng_);
    return out;
}

Directory IdentityProvider::directory_snapshot() const {
    std::lock_guard lock(mu_);
    return directory_;
}

}  // namespace hbesso::idp
