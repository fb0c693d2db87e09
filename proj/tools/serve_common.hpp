#pragma once

// Options shared by the idp and sp daemons.

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hbesso/clock.hpp"
#include "hbesso/random.hpp"

struct ServeFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool test_clock = false;
    std::string fixed_clock;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
        cmd.add_option("--seed", seed, "deterministic randomness (testing only)");
        cmd.add_flag("--test-clock", test_clock, "honor the X-Test-Clock-Offset request header");
        cmd.add_option("--fixed-clock", fixed_clock, "freeze the clock at an RFC 3339 instant (testing only)");
    }

    std::unique_ptr<hbesso::RandomSource> random() const {
        if (seed) return std::make_unique<hbesso::SeededRandom>(*seed);
        return std::make_unique<hbesso::SystemRandom>();
    }

    std::unique_ptr<hbesso::Clock> clock() const {
        if (fixed_clock.empty()) return std::make_unique<hbesso::SystemClock>();
        const auto t = hbesso::parse_rfc3339(fixed_clock);
        if (!t) throw CLI::ValidationError("--fixed-clock", "expected YYYY-MM-DDTHH:MM:SSZ");
        return std::make_unique<hbesso::ManualClock>(*t);
    }
};

inline std::string listen_address(const std::string& configured, const char* env_var) {
    const char* env = std::getenv(env_var);
    return env && *env ? std::string(env) : configured;
}
