#include "hbesso/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <sys/utsname.h>

#include "hbesso/kep.hpp"
#include "hbesso/saml.hpp"

namespace hbesso::bench {

namespace {

using SteadyClock = std::chrono::steady_clock;

template <typename F>
double time_seconds(F&& f) {
    const auto start = SteadyClock::now();
    f();
    return std::chrono::duration<double>(SteadyClock::now() - start).count();
}

// Keeps the optimizer from discarding timed work.
volatile std::uint8_t g_sink;

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

const std::vector<cipher::KeySize>& all_key_sizes() {
    static const std::vector<cipher::KeySize> sizes{cipher::KeySize::bits128, cipher::KeySize::bits192,
                                                    cipher::KeySize::bits256};
    return sizes;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of no values");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

std::string machine_descriptor() {
    std::string cpu = "unknown cpu";
    std::ifstream info("/proc/cpuinfo");
    for (std::string line; std::getline(info, line);) {
        if (line.rfind("model name", 0) == 0) {
            cpu = line.substr(line.find(':') + 2);
            break;
        }
    }
    utsname u{};
    std::string os = uname(&u) == 0 ? fmt::format("{} {} {}", u.sysname, u.release, u.machine) : "unknown os";
    return fmt::format("{}; {} ({} threads); {}", os, cpu, std::thread::hardware_concurrency(),
#if defined(__clang__)
                       fmt::format("clang {}", __clang_version__)
#elif defined(__GNUC__)
                       fmt::format("gcc {}.{}.{}", __GNUC__, __GNUC_MINOR__, __GNUC_PATCHLEVEL__)
#else
                       std::string("unknown compiler")
#endif
    );
}

ThroughputRow bench_throughput(cipher::KeySize key, int megabytes, int reps, RandomSource& rng, bool round_trip) {
    if (megabytes < 1) throw std::invalid_argument("megabytes must be at least 1");
    if (reps < 3) throw std::invalid_argument("repetitions must be at least 3");

    const auto bits = static_cast<int>(key);
    const cipher::BlockCipher c(rng.bytes(static_cast<std::size_t>(bits / 8)));
    const auto nonce = kep::random_nonce(rng);
    const Bytes input = rng.bytes(static_cast<std::size_t>(megabytes) << 20);
    Bytes out(input.size());
    Bytes back(round_trip ? input.size() : 0);

    std::vector<double> times;
    for (int i = 0; i < reps; ++i) {
        times.push_back(time_seconds([&] {
            kep::ctr_transform(c, nonce, input, out.data());
            if (round_trip) kep::ctr_transform(c, nonce, out, back.data());
        }));
        g_sink = out[i % out.size()];
    }

    ThroughputRow row;
    row.key_bits = bits;
    row.megabytes = megabytes;
    // Rates derive from the printed seconds so the columns agree exactly.
    row.seconds = std::max(round_to(median(times), 6), 1e-6);
    row.mb_per_s = round_to(row.megabytes / row.seconds, 3);
    return row;
}

ComparisonRow bench_comparison(cipher::KeySize key, std::size_t payload_bytes, int reps, RandomSource& rng) {
    if (reps < 1) throw std::invalid_argument("repetitions must be at least 1");
    const auto bits = static_cast<int>(key);
    const Bytes key_bytes = rng.bytes(static_cast<std::size_t>(bits / 8));
    const Bytes payload = rng.bytes(payload_bytes);
    const auto nonce = kep::random_nonce(rng);

    // The subject carries the payload, so the serialized assertion is about
    // payload_bytes plus a fixed envelope.
    const auto now = Timestamp(std::chrono::seconds(1'800'000'000));
    auto assertion = saml::build_assertion("urn:hbesso:idp", "", "urn:hbesso:sp", now, Seconds(120), rng);
    assertion.subject = to_hex(payload).substr(0, payload_bytes);

    std::vector<double> cipher_t, seal_t, saml_t;
    for (int i = 0; i < reps; ++i) {
        cipher_t.push_back(time_seconds([&] {
            const cipher::BlockCipher c(key_bytes);
            cipher::StateBlock block{};
            for (std::size_t off = 0; off < payload.size(); off += cipher::kBlockSize) {
                const std::size_t n = std::min(cipher::kBlockSize, payload.size() - off);
                std::fill(block.bytes.begin(), block.bytes.end(), 0);
                std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(off), n, block.bytes.begin());
                g_sink = c.encrypt(block).bytes[0];
            }
        }));
        seal_t.push_back(time_seconds([&] {
            const auto sealed = kep::seal(key_bytes, nonce, payload, {});
            g_sink = sealed.tag.bytes[0];
        }));
        saml_t.push_back(time_seconds([&] {
            const auto ea = saml::encrypt_assertion(assertion, key_bytes, "bench", rng);
            g_sink = ea.sealed.tag.bytes[0];
        }));
    }
    return {bits, median(cipher_t) * 1e3, median(seal_t) * 1e3, median(saml_t) * 1e3};
}

bool Monotonicity::all() const {
    return std::all_of(columns.begin(), columns.end(), [](const auto& c) { return c.second; });
}

namespace {

template <typename Row, typename Get>
bool non_decreasing(const std::vector<Row>& rows, Get get) {
    std::vector<const Row*> sorted;
    for (const auto& r : rows) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const Row* a, const Row* b) { return a->key_bits < b->key_bits; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (get(*sorted[i]) < get(*sorted[i - 1])) return false;
    return true;
}

}  // namespace

Monotonicity check_monotone(const ThroughputReport& r) {
    return {{{"seconds", non_decreasing(r.rows, [](const ThroughputRow& x) { return x.seconds; })}}};
}

Monotonicity check_monotone(const ComparisonReport& r) {
    return {{
        {"cipher", non_decreasing(r.rows, [](const ComparisonRow& x) { return x.cipher_ms; })},
        {"cipher+mac", non_decreasing(r.rows, [](const ComparisonRow& x) { return x.seal_ms; })},
        {"saml+hbe", non_decreasing(r.rows, [](const ComparisonRow& x) { return x.saml_ms; })},
    }};
}

Table to_table(const ThroughputReport& r) {
    Table t;
    t.columns = {"key_bits", "megabytes", "seconds", "mb_per_s"};
    t.labels = {"Key size (bits)", "MB processed", "Time (s)", "MB/s"};
    for (const auto& row : r.rows)
        t.rows.push_back({std::to_string(row.key_bits), fmt::format("{:g}", row.megabytes),
                          fmt::format("{:.6f}", row.seconds), fmt::format("{:.3f}", row.mb_per_s)});
    return t;
}

Table to_table(const ComparisonReport& r) {
    Table t;
    t.columns = {"key_bits", "cipher_ms", "cipher_mac_ms", "saml_hbe_ms"};
    t.labels = {"Key size (bits)", "Cipher only (ms)", "Cipher + MAC (ms)", "SAML + HBE (ms)"};
    for (const auto& row : r.rows)
        t.rows.push_back({std::to_string(row.key_bits), fmt::format("{:.3f}", row.cipher_ms),
                          fmt::format("{:.3f}", row.seal_ms), fmt::format("{:.3f}", row.saml_ms)});
    return t;
}

std::string emit_table(const Table& t, Format f) {
    std::string out;
    if (f == Format::csv) {
        auto record = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
            out += '\n';
        };
        record(t.columns);
        for (const auto& row : t.rows) record(row);
        return out;
    }

    const auto& header = t.labels.size() == t.columns.size() ? t.labels : t.columns;
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& row : t.rows)
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
    auto line = [&](const std::vector<std::string>& fields) {
        std::string l;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) l += "  ";
            l += i == 0 ? fmt::format("{:<{}}", fields[i], width[i]) : fmt::format("{:>{}}", fields[i], width[i]);
        }
        out += l + '\n';
    };
    line(header);
    for (const auto& row : t.rows) line(row);
    return out;
}

}  // namespace hbesso::bench
