#pragma once

// HTTP bindings for the identity and service providers.
//
// IdP:  GET  /challenge?user=U            -> 200 <Challenge .../>
//       POST /sso  SAMLRequest, user, challenge-id, answer
//                                         -> 200 SAMLResponse=..&SessionKey=.. | 403 reason | 400
//       POST /register  user, pin          -> 201 | 409 duplicate-user | 400 invalid-*
// SP:   GET  /resource [X-Session]         -> 200 | 302 Location | 401
//       POST /acs  SAMLResponse            -> 200 + X-Session | 403 reason

#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "hbesso/clock.hpp"
#include "hbesso/idp.hpp"
#include "hbesso/sp.hpp"

namespace hbesso::services {

// Honored only when a service runs with test_clock enabled; shifts that
// request's notion of "now" by the given number of seconds.
inline constexpr const char* kTestClockHeader = "X-Test-Clock-Offset";
inline constexpr const char* kSessionHeader = "X-Session";

struct ServiceOptions {
    bool test_clock = false;
};

// "host:port" -> (host, port). Throws std::invalid_argument.
std::pair<std::string, int> parse_listen_address(std::string_view addr);

class HttpService {
public:
    virtual ~HttpService();

    // port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    void run();    // blocks until stop()
    void start();  // run() on a background thread
    void stop();
    int port() const { return port_; }

protected:
    HttpService(const Clock& clock, ServiceOptions options);

    struct Impl;
    std::unique_ptr<Impl> impl_;
    const Clock& clock_;
    ServiceOptions options_;
    int port_ = -1;
};

class IdpServer final : public HttpService {
public:
    IdpServer(idp::IdentityProvider& idp, const Clock& clock, ServiceOptions options = {});
};

class SpServer final : public HttpService {
public:
    SpServer(sp::ServiceProvider& sp, const Clock& clock, ServiceOptions options = {});
};

}  // namespace hbesso::services
