#pragma once

// Scripted user agent. A suite file holds scenarios of one step per line:
//
//   scenario happy
//     register alice 4821     -> 201
//     gate                    -> 302
//     solve-challenge alice   -> 200
//     post-response           -> 200
//     fetch-resource          -> 200 alice
//   end
//
// "-> STATUS [text]" expects that HTTP status and, when text is given, that
// the response body contains it. post-response-concurrent takes
// "-> accepted N" instead. Lines starting with '#' are comments.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hbesso::agent {

struct Expectation {
    int status = 0;       // HTTP status, or 0 for an "accepted N" count
    std::string text;     // body substring; empty means any body
    int accepted = -1;    // for post-response-concurrent
};

struct Step {
    std::size_t line = 0;
    std::string verb;
    std::vector<std::string> args;
    std::optional<Expectation> expect;
};

struct Scenario {
    std::string name;
    std::size_t line = 0;
    std::vector<Step> steps;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

std::vector<Scenario> parse_suite(std::string_view text);

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Exchange {
    std::string method;
    std::string target;
    Headers request_headers;
    std::string request_body;
    int status = 0;  // 0 when the connection failed
    Headers response_headers;
    std::string response_body;
};

struct StepOutcome {
    std::size_t line = 0;
    std::string verb;
    bool ok = true;
    int status = 0;
    std::string detail;  // mismatch description or rejection reason
};

struct ScenarioResult {
    std::string name;
    bool passed = true;
    std::optional<std::size_t> aborted_at;  // line of a step that hit a network failure
    std::vector<StepOutcome> steps;
    std::vector<Exchange> transcript;
};

struct RunOptions {
    std::string idp_url;  // e.g. http://127.0.0.1:8081
    std::string sp_url;
    std::uint64_t seed = 1;
    bool parallel = false;
    std::string user_suffix;  // appended to every user id, for reruns against a live directory
};

ScenarioResult run_scenario(const Scenario& s, const RunOptions& opts, std::uint64_t seed);

struct SuiteSummary {
    std::vector<ScenarioResult> results;
    std::size_t passed() const;
    int exit_code() const { return passed() == results.size() ? 0 : 1; }
};

SuiteSummary run_suite(const std::vector<Scenario>& scenarios, const RunOptions& opts);

// Human-readable dump of every exchange. PIN form values are masked.
std::string format_transcript(const ScenarioResult& r);
std::string format_summary(const SuiteSummary& s);

}  // namespace hbesso::agent
