#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

namespace classbot {

/// UTC wall-clock instant at millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

/// Formats as ISO-8601 UTC, e.g. "2025-01-06T08:00:00.000Z".
std::string format_iso8601(Timestamp ts);

/// Parses the format produced by format_iso8601 (fraction optional).
/// Throws Error{invalid_input} on malformed input.
Timestamp parse_iso8601(std::string_view text);

/// "YYYY-MM-DD" of the UTC calendar day containing ts.
std::string utc_date(Timestamp ts);

/// Time source shared by the engine, the simulated platform and the rate
/// limiter. `now()` is calendar time; `monotonic()` is for measuring
/// durations and never goes backwards.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
    virtual std::chrono::microseconds monotonic() const = 0;
    /// Lets latency elapse. The system clock sleeps; a manual clock advances.
    virtual void wait(std::chrono::microseconds d) = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
    std::chrono::microseconds monotonic() const override;
    void wait(std::chrono::microseconds d) override;
};

/// Virtual time for deterministic runs; only moves when told to.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start);

    Timestamp now() const override;
    std::chrono::microseconds monotonic() const override;
    void wait(std::chrono::microseconds d) override { advance(d); }

    void advance(std::chrono::microseconds d);
    /// Moves forward to `t`; never moves backwards.
    void advance_to(Timestamp t);

private:
    Timestamp start_;
    std::atomic<std::int64_t> elapsed_us_{0};
};

}  // namespace classbot
