#include <iostream>

#include <CLI11.hpp>

#include "hbesso/bench.hpp"

using namespace hbesso;
using namespace hbesso::bench;

namespace {

void notes(std::ostream& out, const std::string& machine, int reps, const Monotonicity& m) {
    out << "# machine: " << machine << "\n# median of " << reps << " repetitions\n";
    for (const auto& [column, ok] : m.columns)
        out << "# " << column << " non-decreasing in key size: " << (ok ? "pass" : "warn") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cipher benchmarks"};
    app.require_subcommand(1);

    std::vector<int> key_sizes;
    int megabytes = kDefaultMegabytes;
    int reps = kDefaultReps;
    std::size_t payload = kDefaultPayloadBytes;
    bool round_trip = false;
    std::string format = "text";
    const auto formats = CLI::IsMember({"text", "csv"});
    const auto sizes = CLI::IsMember({128, 192, 256});

    auto* tp = app.add_subcommand("throughput", "counter-mode throughput per key size");
    tp->add_option("--key-size", key_sizes, "128, 192 or 256; repeatable (default: all)")->check(sizes);
    tp->add_option("--megabytes", megabytes, "MiB per repetition")->capture_default_str()->check(CLI::Range(1, 1 << 16));
    tp->add_option("--reps", reps, "repetitions (median is reported)")->capture_default_str()->check(CLI::Range(3, 1000));
    tp->add_option("--format", format)->capture_default_str()->check(formats);
    tp->add_flag("--round-trip", round_trip, "time encryption followed by decryption");

    auto* cmp = app.add_subcommand("compare", "cipher only vs cipher+MAC vs protected assertion");
    cmp->add_option("--key-size", key_sizes, "128, 192 or 256; repeatable (default: all)")->check(sizes);
    cmp->add_option("--payload-bytes", payload)->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
    cmp->add_option("--reps", reps)->capture_default_str()->check(CLI::Range(1, 1000));
    cmp->add_option("--format", format)->capture_default_str()->check(formats);

    CLI11_PARSE(app, argc, argv);

    std::vector<cipher::KeySize> keys;
    for (int k : key_sizes) keys.push_back(static_cast<cipher::KeySize>(k));
    if (keys.empty()) keys = all_key_sizes();
    const auto fmt = format == "csv" ? Format::csv : Format::text;
    // Notes go to stderr for csv so stdout stays machine-readable.
    std::ostream& note_out = fmt == Format::csv ? std::cerr : std::cout;

    SystemRandom rng;
    if (*tp) {
        ThroughputReport r{machine_descriptor(), reps, round_trip, {}};
        for (auto k : keys) r.rows.push_back(bench_throughput(k, megabytes, reps, rng, round_trip));
        std::cout << emit_table(to_table(r), fmt);
        notes(note_out, r.machine, reps, check_monotone(r));
        if (round_trip) note_out << "# times cover encryption plus decryption\n";
    } else {
        ComparisonReport r{machine_descriptor(), reps, payload, {}};
        for (auto k : keys) r.rows.push_back(bench_comparison(k, payload, reps, rng));
        std::cout << emit_table(to_table(r), fmt);
        notes(note_out, r.machine, reps, check_monotone(r));
        note_out << "# payload: " << payload << " bytes\n";
    }
    return 0;
}
