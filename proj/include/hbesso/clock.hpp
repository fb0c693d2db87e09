#pragma once

#include <atomic>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace hbesso {

// All protocol time is whole UTC seconds.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override {
        return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
    }
};

// Test clock; safe to read and advance from several threads.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start) : t_(start.time_since_epoch().count()) {}
    Timestamp now() const override { return Timestamp(Seconds(t_.load())); }
    void advance(Seconds d) { t_ += d.count(); }
    void set(Timestamp t) { t_ = t.time_since_epoch().count(); }

private:
    std::atomic<std::int64_t> t_;
};

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_rfc3339(Timestamp t);

// Accepts only the canonical form above.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

}  // namespace hbesso
