#pragma once

// Timing harness: counter-mode throughput per key size, and a three-way
// comparison of cipher only, cipher plus MAC, and full assertion protection.

#include <string>
#include <vector>

#include "hbesso/cipher.hpp"
#include "hbesso/random.hpp"

namespace hbesso::bench {

inline constexpr int kDefaultMegabytes = 64;
inline constexpr int kDefaultReps = 5;
inline constexpr std::size_t kDefaultPayloadBytes = 1 << 20;

const std::vector<cipher::KeySize>& all_key_sizes();

// Middle element, or the mean of the two middle ones. Throws on empty input.
double median(std::vector<double> values);

double round_to(double v, int decimals);

// OS, CPU model and core count, compiler.
std::string machine_descriptor();

struct ThroughputRow {
    int key_bits = 0;
    double megabytes = 0;
    double seconds = 0;   // median, rounded to 6 decimals
    double mb_per_s = 0;  // megabytes / seconds, rounded to 3 decimals
};

struct ThroughputReport {
    std::string machine;
    int repetitions = 0;
    bool round_trip = false;
    std::vector<ThroughputRow> rows;
};

// Encrypts a random buffer of `megabytes` MiB in counter mode `reps` times
// (decrypting too when round_trip is set) and keeps the median. Throws
// std::invalid_argument unless megabytes >= 1 and reps >= 3.
ThroughputRow bench_throughput(cipher::KeySize key, int megabytes, int reps, RandomSource& rng,
                               bool round_trip = false);

struct ComparisonRow {
    int key_bits = 0;
    double cipher_ms = 0;  // raw block encryption
    double seal_ms = 0;    // counter mode plus poly MAC
    double saml_ms = 0;    // serialize and seal an assertion
};

struct ComparisonReport {
    std::string machine;
    int repetitions = 0;
    std::size_t payload_bytes = 0;
    std::vector<ComparisonRow> rows;
};

ComparisonRow bench_comparison(cipher::KeySize key, std::size_t payload_bytes, int reps, RandomSource& rng);

// Per column, true when the median time never decreases as the key grows.
struct Monotonicity {
    std::vector<std::pair<std::string, bool>> columns;
    bool all() const;
};
Monotonicity check_monotone(const ThroughputReport& r);
Monotonicity check_monotone(const ComparisonReport& r);

enum class Format { text, csv };

struct Table {
    std::vector<std::string> columns;  // csv header
    std::vector<std::string> labels;   // text header
    std::vector<std::vector<std::string>> rows;
};

Table to_table(const ThroughputReport& r);
Table to_table(const ComparisonReport& r);

// text: aligned columns, label line then one line per row.
// csv: header row then one record per row.
std::string emit_table(const Table& t, Format f);

}  // namespace hbesso::bench
