#include "hbesso/agent.hpp"

#include <atomic>
#include <charconv>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <httplib.h>

#include "hbesso/kep.hpp"
#include "hbesso/random.hpp"
#include "hbesso/saml.hpp"
#include "hbesso/url.hpp"

namespace hbesso::agent {

namespace {

struct VerbSpec {
    std::size_t min_args;
    std::size_t max_args;
    bool http;                 // talks to a service, so it may carry an expectation
    const char* requires_;     // artifact that must have been produced earlier, or nullptr
    const char* produces;      // artifact made available to later steps, or nullptr
};

const std::map<std::string, VerbSpec, std::less<>>& verbs() {
    static const std::map<std::string, VerbSpec, std::less<>> table{
        {"register", {2, 2, true, nullptr, nullptr}},
        {"gate", {0, 0, true, nullptr, "request"}},
        {"forge-request", {1, 1, false, nullptr, "request"}},
        {"use-wrong-pin", {0, 0, false, nullptr, nullptr}},
        {"solve-challenge", {1, 2, true, "request", "response"}},
        {"flip-bit-in", {1, 2, false, "response", nullptr}},
        {"make-unsolicited", {0, 0, false, "response", nullptr}},
        {"post-response", {0, 0, true, "response", "posted"}},
        {"replay-last-response", {0, 0, true, "posted", nullptr}},
        {"post-response-concurrent", {1, 1, true, "response", "posted"}},
        {"fetch-resource", {0, 0, true, nullptr, nullptr}},
        {"skew-clock", {1, 1, false, nullptr, nullptr}},
        {"assert-no-response", {0, 0, false, nullptr, nullptr}},
    };
    return table;
}

const std::set<std::string, std::less<>> kFlipFields{"assertion", "tag", "nonce", "key-id"};

std::vector<std::string> tokenize(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

std::optional<long long> to_int(std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

Step parse_step(const std::vector<std::string>& toks, std::size_t lineno) {
    Step step;
    step.line = lineno;
    step.verb = toks[0];
    const auto arrow = std::find(toks.begin(), toks.end(), "->");
    step.args.assign(toks.begin() + 1, arrow);

    const auto it = verbs().find(step.verb);
    if (it == verbs().end()) throw ParseError("unknown step '" + step.verb + "'", lineno);
    const auto& spec = it->second;
    if (step.args.size() < spec.min_args || step.args.size() > spec.max_args)
        throw ParseError("wrong number of arguments for '" + step.verb + "'", lineno);

    if (step.verb == "skew-clock" && !to_int(step.args[0])) throw ParseError("skew-clock needs an integer", lineno);
    if (step.verb == "flip-bit-in") {
        if (!kFlipFields.contains(step.args[0])) throw ParseError("cannot flip a bit in '" + step.args[0] + "'", lineno);
        if (step.args.size() == 2 && (!to_int(step.args[1]) || *to_int(step.args[1]) < 0))
            throw ParseError("bit index must be a non-negative integer", lineno);
    }
    if (step.verb == "post-response-concurrent") {
        const auto n = to_int(step.args[0]);
        if (!n || *n < 1 || *n > 256) throw ParseError("concurrency must be 1..256", lineno);
    }

    if (arrow == toks.end()) return step;
    if (!spec.http) throw ParseError("'" + step.verb + "' makes no request and takes no expectation", lineno);
    std::vector<std::string> rest(arrow + 1, toks.end());
    if (rest.empty()) throw ParseError("empty expectation", lineno);

    Expectation e;
    if (step.verb == "post-response-concurrent") {
        const auto n = rest.size() == 2 && rest[0] == "accepted" ? to_int(rest[1]) : std::nullopt;
        if (!n || *n < 0) throw ParseError("expected '-> accepted N'", lineno);
        e.accepted = static_cast<int>(*n);
    } else {
        const auto status = to_int(rest[0]);
        if (!status || *status < 100 || *status > 599) throw ParseError("expected an HTTP status after '->'", lineno);
        e.status = static_cast<int>(*status);
        for (std::size_t i = 1; i < rest.size(); ++i) e.text += (i > 1 ? " " : "") + rest[i];
    }
    step.expect = e;
    return step;
}

}  // namespace

std::vector<Scenario> parse_suite(std::string_view text) {
    std::vector<Scenario> out;
    std::optional<Scenario> current;
    std::set<std::string> produced;
    std::set<std::string> names;

    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lineno;

        const auto toks = tokenize(line);
        if (toks.empty() || toks[0][0] == '#') continue;

        if (toks[0] == "scenario") {
            if (current) throw ParseError("scenario started before 'end' of '" + current->name + "'", lineno);
            if (toks.size() != 2) throw ParseError("expected 'scenario NAME'", lineno);
            if (!names.insert(toks[1]).second) throw ParseError("duplicate scenario name '" + toks[1] + "'", lineno);
            current = Scenario{toks[1], lineno, {}};
            produced.clear();
            continue;
        }
        if (toks[0] == "end") {
            if (!current) throw ParseError("'end' outside a scenario", lineno);
            if (toks.size() != 1) throw ParseError("unexpected text after 'end'", lineno);
            out.push_back(std::move(*current));
            current.reset();
            continue;
        }
        if (!current) throw ParseError("step outside a scenario", lineno);

        auto step = parse_step(toks, lineno);
        const auto& spec = verbs().at(step.verb);
        if (spec.requires_ && !produced.contains(spec.requires_))
            throw ParseError("'" + step.verb + "' needs an earlier step that captures a " + spec.requires_, lineno);
        if (spec.produces) produced.insert(spec.produces);
        current->steps.push_back(std::move(step));
    }
    if (current) throw ParseError("scenario '" + current->name + "' has no 'end'", current->line);
    return out;
}

namespace {

struct NetworkFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* const kRecordedResponseHeaders[] = {"Location", "X-Session"};

std::string wrong_pin(std::string pin) {
    if (pin.empty()) return "0";
    char& c = pin.back();
    c = (c >= '0' && c <= '9') ? static_cast<char>('0' + (c - '0' + 1) % 10) : static_cast<char>(c ^ 1);
    return pin;
}

class Runner {
public:
    Runner(const RunOptions& opts, std::uint64_t seed, ScenarioResult& out)
        : opts_(opts), rng_(seed), out_(out), idp_(make_client(opts.idp_url)), sp_(make_client(opts.sp_url)) {}

    void run(const Scenario& s) {
        out_.name = s.name;
        for (const auto& step : s.steps) {
            StepOutcome o;
            o.line = step.line;
            o.verb = step.verb;
            try {
                execute(step, o);
            } catch (const NetworkFailure& e) {
                o.ok = false;
                o.detail = e.what();
                out_.aborted_at = step.line;
            }
            if (!o.ok) out_.passed = false;
            out_.steps.push_back(std::move(o));
            if (out_.aborted_at) break;
        }
    }

private:
    static std::unique_ptr<httplib::Client> make_client(const std::string& url) {
        auto c = std::make_unique<httplib::Client>(url);
        c->set_connection_timeout(5);
        c->set_read_timeout(20);
        return c;
    }

    Exchange send(httplib::Client& cli, const std::string& method, const std::string& target,
                  const std::string& body = {}, bool with_session = false) {
        Exchange ex;
        ex.method = method;
        ex.target = target;
        ex.request_body = body;
        httplib::Headers headers;
        if (clock_offset_ != 0) {
            ex.request_headers.emplace_back("X-Test-Clock-Offset", std::to_string(clock_offset_));
        }
        if (with_session && session_) ex.request_headers.emplace_back("X-Session", *session_);
        for (const auto& [k, v] : ex.request_headers) headers.emplace(k, v);

        auto res = method == "GET" ? cli.Get(target, headers)
                                   : cli.Post(target, headers, body, "application/x-www-form-urlencoded");
        if (!res) {
            ex.response_body = httplib::to_string(res.error());
            record(ex);
            throw NetworkFailure(method + " " + target + ": " + ex.response_body);
        }
        ex.status = res->status;
        for (const char* h : kRecordedResponseHeaders)
            if (res->has_header(h)) ex.response_headers.emplace_back(h, res->get_header_value(h));
        ex.response_body = res->body;
        record(ex);
        return ex;
    }

    void record(const Exchange& ex) {
        std::lock_guard lock(transcript_mu_);
        out_.transcript.push_back(ex);
    }

    static void check(const Step& step, const Exchange& ex, StepOutcome& o) {
        o.status = ex.status;
        if (ex.status >= 400) o.detail = ex.response_body;
        if (!step.expect) return;
        const auto& e = *step.expect;
        if (ex.status != e.status || (!e.text.empty() && ex.response_body.find(e.text) == std::string::npos)) {
            o.ok = false;
            o.detail = "expected " + std::to_string(e.status) + (e.text.empty() ? "" : " " + e.text) + ", got " +
                       std::to_string(ex.status) + " " + ex.response_body.substr(0, ex.response_body.find('\n'));
        }
    }

    std::string user(const std::string& name) const { return name + opts_.user_suffix; }

    void execute(const Step& step, StepOutcome& o) {
        const auto& v = step.verb;
        if (v == "register") {
            const auto u = user(step.args[0]);
            pins_[u] = step.args[1];
            check(step, send(*idp_, "POST", "/register", build_form({{"user", u}, {"pin", step.args[1]}})), o);
        } else if (v == "gate") {
            const auto ex = send(*sp_, "GET", "/resource");
            capture_request(ex);
            check(step, ex, o);
        } else if (v == "forge-request") {
            forge(step, o);
        } else if (v == "use-wrong-pin") {
            wrong_pin_next_ = true;
        } else if (v == "solve-challenge") {
            solve(step, o);
        } else if (v == "flip-bit-in") {
            flip(step, o);
        } else if (v == "make-unsolicited") {
            mutate_response(o, [&](saml::SsoResponse& r) { r.in_response_to = rng_.hex_id(); });
        } else if (v == "post-response" || v == "replay-last-response") {
            if (!response_b64_) return fail(o, "no SAMLResponse has been captured");
            const auto ex = send(*sp_, "POST", "/acs", build_form({{"SAMLResponse", *response_b64_}}));
            if (ex.status == 200) session_ = ex.response_body;
            check(step, ex, o);
        } else if (v == "post-response-concurrent") {
            post_concurrent(step, o);
        } else if (v == "fetch-resource") {
            const auto ex = send(*sp_, "GET", "/resource", {}, true);
            if (ex.status == 302) capture_request(ex);
            check(step, ex, o);
        } else if (v == "skew-clock") {
            clock_offset_ = *to_int(step.args[0]);
        } else if (v == "assert-no-response") {
            for (const auto& ex : out_.transcript)
                if (ex.response_body.find("SAMLResponse=") != std::string::npos)
                    return fail(o, "a SAMLResponse was issued during this scenario");
        }
    }

    static void fail(StepOutcome& o, std::string why) {
        o.ok = false;
        o.detail = std::move(why);
    }

    void capture_request(const Exchange& ex) {
        for (const auto& [k, val] : ex.response_headers) {
            if (k != "Location") continue;
            const auto p = val.find("SAMLRequest=");
            if (p == std::string::npos) continue;
            auto raw = val.substr(p + 12);
            raw = raw.substr(0, raw.find('&'));
            request_b64_ = url_decode(raw);
        }
    }

    // A request naming another SP; ACS URL and instant follow the captured
    // request when there is one.
    void forge(const Step& step, StepOutcome& o) {
        std::string acs = opts_.sp_url + "/acs";
        Timestamp instant{};
        if (request_b64_) {
            const auto xml = base64_decode(*request_b64_);
            const auto captured = xml ? saml::parse_authn_request(hbesso::to_string(ByteView(*xml)))
                                      : decltype(saml::parse_authn_request("")){unexpected(saml::ParseError::bad_encoding)};
            if (!captured) return fail(o, "captured AuthnRequest does not parse");
            acs = captured->acs_url;
            instant = captured->issue_instant;
        }
        const auto req = saml::build_authn_request(step.args[0], acs, instant, rng_);
        request_b64_ = base64_encode(as_bytes(saml::serialize(req)));
    }

    void solve(const Step& step, StepOutcome& o) {
        if (!request_b64_) return fail(o, "no AuthnRequest has been captured");
        const auto u = user(step.args[0]);
        std::string pin = step.args.size() > 1 ? step.args[1] : (pins_.contains(u) ? pins_[u] : "0000");
        if (wrong_pin_next_) {
            pin = wrong_pin(pin);
            wrong_pin_next_ = false;
        }

        const auto chx = send(*idp_, "GET", "/challenge?user=" + url_encode(u));
        if (chx.status != 200) return check(step, chx, o);

        kep::Challenge ch;
        kep::Salt salt{};
        int iterations = 0;
        try {
            boost::property_tree::ptree tree;
            std::istringstream in(chx.response_body);
            boost::property_tree::read_xml(in, tree);
            const auto& attrs = tree.get_child("Challenge.<xmlattr>");
            ch.id = attrs.get<std::string>("ID");
            ch.user_id = attrs.get<std::string>("User");
            const auto nonce = base64_decode(attrs.get<std::string>("Nonce"));
            const auto s = base64_decode(attrs.get<std::string>("Salt"));
            iterations = attrs.get<int>("Iterations");
            if (!nonce || nonce->size() != ch.nonce.size() || !s || s->size() != salt.size())
                return fail(o, "challenge fields have the wrong size");
            std::copy(nonce->begin(), nonce->end(), ch.nonce.begin());
            std::copy(s->begin(), s->end(), salt.begin());
        } catch (const boost::property_tree::ptree_error& e) {
            return fail(o, std::string("unreadable challenge: ") + e.what());
        }

        std::optional<kep::LongTermKey> ltk;
        try {
            ltk = kep::derive_long_term_key(as_bytes(pin), salt, iterations);
        } catch (const std::invalid_argument& e) {
            return fail(o, e.what());
        }
        const auto answer = kep::answer_challenge(*ltk, ch);
        const auto ex = send(*idp_, "POST", "/sso",
                             build_form({{"SAMLRequest", *request_b64_},
                                         {"user", u},
                                         {"challenge-id", ch.id},
                                         {"answer", base64_encode(answer.bytes)}}));
        check(step, ex, o);
        if (ex.status != 200) return;

        const auto form = parse_form(ex.response_body);
        if (!form.contains("SAMLResponse")) return fail(o, "200 without a SAMLResponse");
        response_b64_ = form.at("SAMLResponse");
        // The session key must be readable by the user alone.
        const auto wrapped = form.contains("SessionKey") ? kep::decode_wire(form.at("SessionKey")) : std::nullopt;
        if (!wrapped || !kep::unwrap_session_key(*ltk, u, *wrapped)) fail(o, "session key did not unwrap");
    }

    template <typename F>
    void mutate_response(StepOutcome& o, F&& f) {
        if (!response_b64_) return fail(o, "no SAMLResponse has been captured");
        const auto xml = base64_decode(*response_b64_);
        if (!xml) return fail(o, "captured SAMLResponse is not base64");
        auto resp = saml::parse_response(hbesso::to_string(ByteView(*xml)));
        if (!resp) return fail(o, "captured SAMLResponse does not parse");
        f(*resp);
        response_b64_ = base64_encode(as_bytes(saml::serialize(*resp)));
    }

    void flip(const Step& step, StepOutcome& o) {
        mutate_response(o, [&](saml::SsoResponse& r) {
            auto& sealed = r.encrypted_assertion.sealed;
            std::span<std::uint8_t> field;
            const auto& name = step.args[0];
            if (name == "assertion") field = sealed.ciphertext;
            if (name == "tag") field = sealed.tag.bytes;
            if (name == "nonce") field = sealed.nonce;
            if (name == "key-id")
                field = std::span(reinterpret_cast<std::uint8_t*>(sealed.key_id.data()), sealed.key_id.size());
            if (field.empty()) return fail(o, "field '" + name + "' is empty");
            const std::size_t bits = field.size() * 8;
            std::size_t bit = 0;
            if (step.args.size() == 2) {
                bit = static_cast<std::size_t>(*to_int(step.args[1]));
                if (bit >= bits) return fail(o, "bit index beyond the field");
            } else {
                const auto b = rng_.array<8>();
                bit = static_cast<std::size_t>(load_le64(b.data()) % bits);
            }
            field[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            o.detail = name + " bit " + std::to_string(bit);
        });
    }

    void post_concurrent(const Step& step, StepOutcome& o) {
        const int n = static_cast<int>(*to_int(step.args[0]));
        const auto body = build_form({{"SAMLResponse", *response_b64_}});
        std::atomic<int> accepted{0};
        std::atomic<bool> network_failed{false};
        std::mutex session_mu;
        std::vector<std::thread> threads;
        for (int i = 0; i < n; ++i)
            threads.emplace_back([&] {
                auto cli = make_client(opts_.sp_url);
                try {
                    const auto ex = send(*cli, "POST", "/acs", body);
                    if (ex.status == 200) {
                        ++accepted;
                        std::lock_guard lock(session_mu);
                        session_ = ex.response_body;
                    }
                } catch (const NetworkFailure&) {
                    network_failed = true;
                }
            });
        for (auto& t : threads) t.join();
        if (network_failed) throw NetworkFailure("concurrent POST /acs failed");
        o.status = 200;
        o.detail = "accepted " + std::to_string(accepted.load()) + " of " + std::to_string(n);
        if (step.expect && accepted.load() != step.expect->accepted) {
            o.ok = false;
            o.detail = "expected accepted " + std::to_string(step.expect->accepted) + ", got " + o.detail;
        }
    }

    const RunOptions& opts_;
    SeededRandom rng_;
    ScenarioResult& out_;
    std::unique_ptr<httplib::Client> idp_;
    std::unique_ptr<httplib::Client> sp_;
    std::mutex transcript_mu_;

    std::map<std::string, std::string> pins_;
    std::optional<std::string> request_b64_;
    std::optional<std::string> response_b64_;
    std::optional<std::string> session_;
    bool wrong_pin_next_ = false;
    long long clock_offset_ = 0;
};

std::string mask_pin(const std::string& body) {
    if (body.find("pin=") == std::string::npos) return body;
    auto form = parse_form(body);
    if (!form.contains("pin")) return body;
    std::string out;
    for (const auto& [k, v] : form) {
        if (!out.empty()) out += '&';
        out += url_encode(k) + "=" + (k == "pin" ? std::string("****") : url_encode(v));
    }
    return out;
}

}  // namespace

ScenarioResult run_scenario(const Scenario& s, const RunOptions& opts, std::uint64_t seed) {
    ScenarioResult out;
    Runner(opts, seed, out).run(s);
    return out;
}

std::size_t SuiteSummary::passed() const {
    std::size_t n = 0;
    for (const auto& r : results) n += r.passed;
    return n;
}

SuiteSummary run_suite(const std::vector<Scenario>& scenarios, const RunOptions& opts) {
    SuiteSummary summary;
    summary.results.resize(scenarios.size());
    auto seed_for = [&](std::size_t i) { return opts.seed + 0x9e3779b97f4a7c15ULL * (i + 1); };
    if (!opts.parallel) {
        for (std::size_t i = 0; i < scenarios.size(); ++i)
            summary.results[i] = run_scenario(scenarios[i], opts, seed_for(i));
        return summary;
    }
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        threads.emplace_back([&, i] { summary.results[i] = run_scenario(scenarios[i], opts, seed_for(i)); });
    for (auto& t : threads) t.join();
    return summary;
}

std::string format_transcript(const ScenarioResult& r) {
    std::string out = "# scenario " + r.name + "\n";
    for (const auto& ex : r.transcript) {
        out += ">>> " + ex.method + " " + ex.target + "\n";
        for (const auto& [k, v] : ex.request_headers) out += k + ": " + v + "\n";
        if (!ex.request_body.empty()) out += mask_pin(ex.request_body) + "\n";
        out += "<<< " + (ex.status ? std::to_string(ex.status) : std::string("connection failed")) + "\n";
        for (const auto& [k, v] : ex.response_headers) out += k + ": " + v + "\n";
        if (!ex.response_body.empty()) {
            out += ex.response_body;
            if (ex.response_body.back() != '\n') out += '\n';
        }
        out += '\n';
    }
    return out;
}

std::string format_summary(const SuiteSummary& s) {
    std::string out;
    for (const auto& r : s.results) {
        out += (r.passed ? "PASS  " : "FAIL  ") + r.name;
        for (const auto& st : r.steps)
            if (!st.ok) out += "\n      line " + std::to_string(st.line) + " " + st.verb + ": " + st.detail;
        if (r.aborted_at) out += "\n      aborted at line " + std::to_string(*r.aborted_at);
        out += '\n';
    }
    out += std::to_string(s.results.size()) + " scenarios, " + std::to_string(s.passed()) + " passed, " +
           std::to_string(s.results.size() - s.passed()) + " failed\n";
    return out;
}

}  // namespace hbesso::agent
