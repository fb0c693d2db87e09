#include "hbesso/saml.hpp"

#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace hbesso::saml {

namespace {

namespace pt = boost::property_tree;

constexpr std::string_view kAssertionNs = "urn:oasis:names:tc:SAML:2.0:assertion";
constexpr std::string_view kProtocolNs = "urn:oasis:names:tc:SAML:2.0:protocol";

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string_view local_name(std::string_view qname) {
    const auto colon = qname.find(':');
    return colon == std::string_view::npos ? qname : qname.substr(colon + 1);
}

const pt::ptree* child(const pt::ptree& t, std::string_view name) {
    for (const auto& [key, sub] : t)
        if (key != "<xmlattr>" && local_name(key) == name) return &sub;
    return nullptr;
}

std::optional<std::string> attribute(const pt::ptree& t, std::string_view name) {
    const auto attrs = t.get_child_optional("<xmlattr>");
    if (!attrs) return std::nullopt;
    for (const auto& [key, sub] : *attrs)
        if (local_name(key) == name) return sub.data();
    return std::nullopt;
}

// Each step either yields the field or records the first error seen.
class Reader {
public:
    std::optional<ParseError> error;

    const pt::ptree* element(const pt::ptree* t, std::string_view name) {
        if (!t || error) return nullptr;
        const auto* c = child(*t, name);
        if (!c) error = ParseError::missing_field;
        return c;
    }

    std::string text(const pt::ptree* t, std::string_view name) {
        const auto* c = element(t, name);
        return c ? c->data() : std::string{};
    }

    std::string attr(const pt::ptree* t, std::string_view name) {
        if (!t || error) return {};
        auto v = attribute(*t, name);
        if (!v) {
            error = ParseError::missing_field;
            return {};
        }
        return *v;
    }

    Timestamp time_attr(const pt::ptree* t, std::string_view name) {
        const auto raw = attr(t, name);
        if (error) return {};
        const auto ts = parse_rfc3339(raw);
        if (!ts) {
            error = ParseError::bad_timestamp;
            return {};
        }
        return *ts;
    }
};

Expected<Assertion, ParseError> read_assertion(const pt::ptree& root) {
    Reader rd;
    Assertion a;
    a.id = rd.attr(&root, "ID");
    a.issue_instant = rd.time_attr(&root, "IssueInstant");
    a.issuer = rd.text(&root, "Issuer");
    a.subject = rd.text(rd.element(&root, "Subject"), "NameID");
    const auto* conditions = rd.element(&root, "Conditions");
    a.not_before = rd.time_attr(conditions, "NotBefore");
    a.not_on_or_after = rd.time_attr(conditions, "NotOnOrAfter");
    a.audience = rd.text(rd.element(conditions, "AudienceRestriction"), "Audience");
    const auto* context = rd.element(rd.element(&root, "AuthnStatement"), "AuthnContext");
    a.authn_method = rd.text(context, "AuthnContextClassRef");
    if (rd.error) return unexpected(*rd.error);
    if (!(a.not_before <= a.issue_instant && a.issue_instant < a.not_on_or_after))
        return unexpected(ParseError::inconsistent_times);
    return a;
}

Expected<AuthnRequest, ParseError> read_authn_request(const pt::ptree& root) {
    Reader rd;
    AuthnRequest r;
    r.id = rd.attr(&root, "ID");
    r.issue_instant = rd.time_attr(&root, "IssueInstant");
    r.acs_url = rd.attr(&root, "AssertionConsumerServiceURL");
    r.sp_entity_id = rd.text(&root, "Issuer");
    if (rd.error) return unexpected(*rd.error);
    return r;
}

Expected<SsoResponse, ParseError> read_response(const pt::ptree& root) {
    Reader rd;
    SsoResponse r;
    r.in_response_to = rd.attr(&root, "InResponseTo");
    r.issuer = rd.text(&root, "Issuer");
    const auto wire = rd.text(&root, "EncryptedAssertion");
    if (rd.error) return unexpected(*rd.error);
    auto sealed = kep::decode_wire(wire);
    if (!sealed) return unexpected(ParseError::bad_encoding);
    r.encrypted_assertion.sealed = std::move(*sealed);
    return r;
}

// Returns the root element name and subtree, or an error for anything that
// is not exactly one well-formed element.
Expected<std::pair<std::string, pt::ptree>, ParseError> read_root(std::string_view xml) {
    pt::ptree doc;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, doc);
    } catch (const pt::xml_parser_error&) {
        return unexpected(ParseError::malformed_xml);
    }
    const pt::ptree* root = nullptr;
    std::string name;
    for (const auto& [key, sub] : doc) {
        if (key == "<xmlcomment>") continue;
        if (root) return unexpected(ParseError::malformed_xml);
        root = &sub;
        name = key;
    }
    if (!root) return unexpected(ParseError::malformed_xml);
    return std::pair{std::string(local_name(name)), *root};
}

}  // namespace

Assertion build_assertion(std::string_view issuer, std::string_view subject, std::string_view audience,
                          Timestamp now, Seconds lifetime, RandomSource& rng) {
    if (lifetime <= Seconds(0)) throw std::invalid_argument("assertion lifetime must be positive");
    Assertion a;
    a.id = rng.hex_id();
    a.issuer = std::string(issuer);
    a.subject = std::string(subject);
    a.audience = std::string(audience);
    a.issue_instant = now;
    a.not_before = now;
    a.not_on_or_after = now + lifetime;
    return a;
}

AuthnRequest build_authn_request(std::string_view sp_entity_id, std::string_view acs_url, Timestamp now,
                                 RandomSource& rng) {
    return AuthnRequest{rng.hex_id(), std::string(sp_entity_id), std::string(acs_url), now};
}

std::string serialize(const Assertion& a) {
    std::string x;
    x += "<Assertion xmlns=\"" + std::string(kAssertionNs) + "\" ID=\"" + escape(a.id) + "\" IssueInstant=\"" +
         format_rfc3339(a.issue_instant) + "\" Version=\"2.0\">";
    x += "<Issuer>" + escape(a.issuer) + "</Issuer>";
    x += "<Subject><NameID>" + escape(a.subject) + "</NameID></Subject>";
    x += "<Conditions NotBefore=\"" + format_rfc3339(a.not_before) + "\" NotOnOrAfter=\"" +
         format_rfc3339(a.not_on_or_after) + "\">";
    x += "<AudienceRestriction><Audience>" + escape(a.audience) + "</Audience></AudienceRestriction>";
    x += "</Conditions>";
    x += "<AuthnStatement AuthnInstant=\"" + format_rfc3339(a.issue_instant) + "\"><AuthnContext>";
    x += "<AuthnContextClassRef>" + escape(a.authn_method) + "</AuthnContextClassRef>";
    x += "</AuthnContext></AuthnStatement></Assertion>";
    return x;
}

std::string serialize(const AuthnRequest& r) {
    return "<AuthnRequest xmlns=\"" + std::string(kProtocolNs) + "\" ID=\"" + escape(r.id) +
           "\" Version=\"2.0\" IssueInstant=\"" + format_rfc3339(r.issue_instant) +
           "\" AssertionConsumerServiceURL=\"" + escape(r.acs_url) + "\"><Issuer>" + escape(r.sp_entity_id) +
           "</Issuer></AuthnRequest>";
}

std::string serialize(const SsoResponse& r) {
    return "<Response xmlns=\"" + std::string(kProtocolNs) + "\" InResponseTo=\"" + escape(r.in_response_to) +
           "\" Version=\"2.0\"><Issuer>" + escape(r.issuer) + "</Issuer><EncryptedAssertion>" +
           kep::encode_wire(r.encrypted_assertion.sealed) + "</EncryptedAssertion></Response>";
}

std::string serialize(const Message& m) {
    return std::visit([](const auto& v) { return serialize(v); }, m);
}

std::string_view to_string(ParseError e) {
    switch (e) {
        case ParseError::malformed_xml: return "malformed-xml";
        case ParseError::unknown_root: return "unknown-root";
        case ParseError::missing_field: return "missing-field";
        case ParseError::bad_timestamp: return "bad-timestamp";
        case ParseError::bad_encoding: return "bad-encoding";
        case ParseError::inconsistent_times: return "inconsistent-times";
    }
    return "unknown";
}

Expected<Message, ParseError> parse(std::string_view xml) {
    auto root = read_root(xml);
    if (!root) return unexpected(root.error());
    const auto& [name, tree] = *root;
    auto lift = [](auto r) -> Expected<Message, ParseError> {
        if (!r) return unexpected(r.error());
        return Message(std::move(*r));
    };
    if (name == "Assertion") return lift(read_assertion(tree));
    if (name == "AuthnRequest") return lift(read_authn_request(tree));
    if (name == "Response") return lift(read_response(tree));
    return unexpected(ParseError::unknown_root);
}

namespace {
template <class T>
Expected<T, ParseError> parse_as(std::string_view xml) {
    auto m = parse(xml);
    if (!m) return unexpected(m.error());
    if (auto* v = std::get_if<T>(&*m)) return std::move(*v);
    return unexpected(ParseError::unknown_root);
}
}  // namespace

Expected<Assertion, ParseError> parse_assertion(std::string_view xml) { return parse_as<Assertion>(xml); }
Expected<AuthnRequest, ParseError> parse_authn_request(std::string_view xml) { return parse_as<AuthnRequest>(xml); }
Expected<SsoResponse, ParseError> parse_response(std::string_view xml) { return parse_as<SsoResponse>(xml); }

EncryptedAssertion encrypt_assertion(const Assertion& a, ByteView federation_key, std::string_view key_id,
                                     RandomSource& rng) {
    const auto xml = serialize(a);
    return {kep::seal_payload(federation_key, key_id, kep::random_nonce(rng), as_bytes(xml), {})};
}

std::string_view to_string(Reject r) {
    switch (r) {
        case Reject::bad_tag: return "bad-tag";
        case Reject::malformed: return "malformed";
        case Reject::wrong_audience: return "wrong-audience";
        case Reject::expired: return "expired";
        case Reject::not_yet_valid: return "not-yet-valid";
    }
    return "unknown";
}

Expected<Assertion, Reject> decrypt_validate(const EncryptedAssertion& ea, ByteView federation_key, Timestamp now,
                                             Seconds skew, std::string_view audience) {
    const auto plain = kep::open_payload(federation_key, ea.sealed, {});
    if (!plain) return unexpected(Reject::bad_tag);
    auto a = parse_assertion(hbesso::to_string(ByteView(*plain)));
    if (!a) return unexpected(Reject::malformed);
    if (a->audience != audience) return unexpected(Reject::wrong_audience);
    if (now < a->not_before - skew) return unexpected(Reject::not_yet_valid);
    if (now >= a->not_on_or_after + skew) return unexpected(Reject::expired);
    return std::move(*a);
}

}  // namespace hbesso::saml
