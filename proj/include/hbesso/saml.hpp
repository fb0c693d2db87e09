#pragma once

// Minimal SAML dialect: Assertion, AuthnRequest and Response, each with a
// canonical XML form (fixed element order, no insignificant whitespace,
// whole-second UTC timestamps). Parsing tolerates reordered children and
// namespace prefixes. Assertions always travel encrypted-then-MACed.

#include <string>
#include <string_view>
#include <variant>

#include "hbesso/bytes.hpp"
#include "hbesso/clock.hpp"
#include "hbesso/expected.hpp"
#include "hbesso/kep.hpp"
#include "hbesso/random.hpp"

namespace hbesso::saml {

inline constexpr std::string_view kAuthnMethod = "PIN-PAD";
inline constexpr Seconds kDefaultClockSkew{30};

struct Assertion {
    std::string id;  // 32 hex digits
    std::string issuer;
    std::string subject;
    Timestamp issue_instant{};
    Timestamp not_before{};
    Timestamp not_on_or_after{};
    std::string audience;
    std::string authn_method{kAuthnMethod};

    friend bool operator==(const Assertion&, const Assertion&) = default;
};

struct AuthnRequest {
    std::string id;
    std::string sp_entity_id;
    std::string acs_url;
    Timestamp issue_instant{};

    friend bool operator==(const AuthnRequest&, const AuthnRequest&) = default;
};

struct EncryptedAssertion {
    kep::SealedPayload sealed;
    friend bool operator==(const EncryptedAssertion&, const EncryptedAssertion&) = default;
};

struct SsoResponse {
    std::string in_response_to;
    std::string issuer;
    EncryptedAssertion encrypted_assertion;

    friend bool operator==(const SsoResponse&, const SsoResponse&) = default;
};

using Message = std::variant<Assertion, AuthnRequest, SsoResponse>;

// Throws std::invalid_argument when lifetime <= 0.
Assertion build_assertion(std::string_view issuer, std::string_view subject, std::string_view audience,
                          Timestamp now, Seconds lifetime, RandomSource& rng);

AuthnRequest build_authn_request(std::string_view sp_entity_id, std::string_view acs_url, Timestamp now,
                                 RandomSource& rng);

std::string serialize(const Assertion& a);
std::string serialize(const AuthnRequest& r);
std::string serialize(const SsoResponse& r);
std::string serialize(const Message& m);

enum class ParseError {
    malformed_xml,
    unknown_root,
    missing_field,
    bad_timestamp,
    bad_encoding,       // EncryptedAssertion body is not a sealed-payload encoding
    inconsistent_times, // violates not-before <= issue-instant < not-on-or-after
};
std::string_view to_string(ParseError e);

Expected<Message, ParseError> parse(std::string_view xml);
Expected<Assertion, ParseError> parse_assertion(std::string_view xml);
Expected<AuthnRequest, ParseError> parse_authn_request(std::string_view xml);
Expected<SsoResponse, ParseError> parse_response(std::string_view xml);

EncryptedAssertion encrypt_assertion(const Assertion& a, ByteView federation_key, std::string_view key_id,
                                     RandomSource& rng);

enum class Reject { bad_tag, malformed, wrong_audience, expired, not_yet_valid };
std::string_view to_string(Reject r);

// Checks, in order: tag, parseability, audience, then the window
// [not_before - skew, not_on_or_after + skew). Reports the first failure.
Expected<Assertion, Reject> decrypt_validate(const EncryptedAssertion& ea, ByteView federation_key, Timestamp now,
                                             Seconds skew, std::string_view audience);

}  // namespace hbesso::saml
