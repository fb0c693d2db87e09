#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hbesso/agent.hpp"
#include "hbesso/keystore.hpp"

using namespace hbesso;

int main(int argc, char** argv) {
    CLI::App app{"Scripted SSO user agent"};
    app.require_subcommand(1);

    std::string suite_path, transcript_path;
    agent::RunOptions opts;
    auto* run = app.add_subcommand("run", "run a scenario suite against live services");
    run->add_option("--suite", suite_path, "scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--idp", opts.idp_url, "IdP base URL, e.g. http://127.0.0.1:8081")->required();
    run->add_option("--sp", opts.sp_url, "SP base URL, e.g. http://127.0.0.1:8082")->required();
    run->add_option("--seed", opts.seed, "seed for agent-side randomness")->capture_default_str();
    run->add_flag("--parallel", opts.parallel, "run scenarios concurrently");
    run->add_option("--transcript", transcript_path, "write every HTTP exchange to this file");
    run->add_option("--user-suffix", opts.user_suffix, "append to every user id (reruns against one directory)");
    CLI11_PARSE(app, argc, argv);

    std::vector<agent::Scenario> suite;
    try {
        suite = agent::parse_suite(read_file(suite_path));
    } catch (const agent::ParseError& e) {
        std::cerr << suite_path << ":" << e.line() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    const auto summary = agent::run_suite(suite, opts);
    std::cout << agent::format_summary(summary);
    if (!transcript_path.empty()) {
        std::string text;
        for (const auto& r : summary.results) text += agent::format_transcript(r);
        write_file_atomic(transcript_path, text);
    }
    return summary.exit_code();
}
