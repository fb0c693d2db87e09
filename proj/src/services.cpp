#include "hbesso/services.hpp"

#include <charconv>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hbesso/url.hpp"

namespace hbesso::services {

struct HttpService::Impl {
    httplib::Server server;
    std::thread thread;
};

namespace {

Timestamp request_time(const httplib::Request& req, const Clock& clock, const ServiceOptions& opts) {
    auto now = clock.now();
    if (opts.test_clock && req.has_header(kTestClockHeader)) {
        const auto raw = req.get_header_value(kTestClockHeader);
        long long offset = 0;
        auto [_, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), offset);
        if (ec == std::errc{}) now += Seconds(offset);
    }
    return now;
}

void reply(httplib::Response& res, int status, const std::string& body,
           const char* content_type = "text/plain") {
    res.status = status;
    res.set_content(body, content_type);
}

std::string xml_attr_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::pair<std::string, int> parse_listen_address(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("listen address must be host:port");
    int port = 0;
    const auto digits = addr.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || port < 0 || port > 65535)
        throw std::invalid_argument("bad port in listen address");
    return {std::string(addr.substr(0, colon)), port};
}

HttpService::HttpService(const Clock& clock, ServiceOptions options)
    : impl_(std::make_unique<Impl>()), clock_(clock), options_(options) {}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0)
        port_ = impl_->server.bind_to_any_port(host);
    else
        port_ = impl_->server.bind_to_port(host, port) ? port : -1;
    return port_;
}

void HttpService::run() { impl_->server.listen_after_bind(); }

void HttpService::start() {
    impl_->thread = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
}

void HttpService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

IdpServer::IdpServer(idp::IdentityProvider& idp, const Clock& clock, ServiceOptions options)
    : HttpService(clock, options) {
    auto& srv = impl_->server;

    srv.Get("/challenge", [this, &idp](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("user")) return reply(res, 400, "missing user");
        const auto user = req.get_param_value("user");
        const auto offer = idp.issue_challenge(user, request_time(req, clock_, options_));
        const auto& ch = offer.challenge;
        const std::string xml = "<Challenge ID=\"" + ch.id + "\" User=\"" + xml_attr_escape(user) + "\" Nonce=\"" +
                                base64_encode(ch.nonce) + "\" Salt=\"" + base64_encode(offer.salt) +
                                "\" Iterations=\"" + std::to_string(offer.iterations) + "\" IssueInstant=\"" +
                                format_rfc3339(ch.issued_at) + "\" NotOnOrAfter=\"" + format_rfc3339(ch.expires_at) +
                                "\"/>";
        reply(res, 200, xml, "application/xml");
    });

    srv.Post("/sso", [this, &idp](const httplib::Request& req, httplib::Response& res) {
        for (const char* field : {"SAMLRequest", "user", "challenge-id", "answer"})
            if (!req.has_param(field)) return reply(res, 400, "malformed-request");
        const auto xml = base64_decode(req.get_param_value("SAMLRequest"));
        if (!xml) return reply(res, 400, "malformed-request");
        const auto request = saml::parse_authn_request(hbesso::to_string(ByteView(*xml)));
        const auto answer = base64_decode(req.get_param_value("answer"));
        if (!request || !answer || answer->size() != mac::kTagSize) return reply(res, 400, "malformed-request");
        mac::MacTag tag;
        std::copy(answer->begin(), answer->end(), tag.bytes.begin());

        const auto user = req.get_param_value("user");
        auto issued = idp.complete_authn(user, *request, req.get_param_value("challenge-id"), tag,
                                         request_time(req, clock_, options_));
        if (!issued) {
            spdlog::info("idp: authentication of {} refused: {}", user, idp::to_string(issued.error()));
            return reply(res, 403, std::string(idp::to_string(issued.error())));
        }
        spdlog::info("idp: issued assertion {} for {} to {}", issued->assertion_id, user, request->sp_entity_id);
        const auto body = build_form({
            {"SAMLResponse", base64_encode(as_bytes(saml::serialize(issued->response)))},
            {"SessionKey", kep::encode_wire(issued->wrapped_session_key)},
        });
        reply(res, 200, body, "application/x-www-form-urlencoded");
    });

    srv.Post("/register", [this, &idp](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("user") || !req.has_param("pin")) return reply(res, 400, "malformed-request");
        auto r = idp.register_user(req.get_param_value("user"), req.get_param_value("pin"),
                                   request_time(req, clock_, options_));
        if (r) return reply(res, 201, "registered");
        const int status = r.error() == idp::IdpError::duplicate_user    ? 409
                           : r.error() == idp::IdpError::storage_failure ? 500
                                                                         : 400;
        reply(res, status, std::string(idp::to_string(r.error())));
    });
}

SpServer::SpServer(sp::ServiceProvider& sp, const Clock& clock, ServiceOptions options)
    : HttpService(clock, options) {
    auto& srv = impl_->server;

    srv.Get("/resource", [this, &sp](const httplib::Request& req, httplib::Response& res) {
        const auto now = request_time(req, clock_, options_);
        if (req.has_header(kSessionHeader)) {
            const auto session = sp.find_session(req.get_header_value(kSessionHeader), now);
            if (!session) return reply(res, 401, "invalid-session");
            return reply(res, 200, "protected resource for " + session->subject + "\n");
        }
        const auto request = sp.gate(now);
        res.status = 302;
        res.set_header("Location", sp.redirect_location(request));
    });

    srv.Post("/acs", [this, &sp](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("SAMLResponse")) return reply(res, 403, "malformed");
        const auto xml = base64_decode(req.get_param_value("SAMLResponse"));
        if (!xml) return reply(res, 403, "malformed");
        const auto response = saml::parse_response(hbesso::to_string(ByteView(*xml)));
        if (!response) return reply(res, 403, "malformed");
        auto session = sp.consume_response(*response, request_time(req, clock_, options_));
        if (!session) return reply(res, 403, std::string(sp::to_string(session.error())));
        res.set_header(kSessionHeader, session->token);
        reply(res, 200, session->token);
    });
}

}  // namespace hbesso::services
