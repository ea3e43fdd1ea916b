#include "classbot/core/time.hpp"

#include <cstdio>
#include <thread>

#include "classbot/core/error.hpp"

namespace classbot {

namespace {

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > text.size()) {
        return false;
    }
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = text[pos + i];
        if (c < '0' || c > '9') {
            return false;
        }
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

}  // namespace

std::string format_iso8601(Timestamp ts) {
    using namespace std::chrono;
    const auto day = floor<days>(ts);
    const year_month_day ymd{day};
    const hh_mm_ss<milliseconds> tod{ts - day};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                  static_cast<long>(tod.seconds().count()), static_cast<long>(tod.subseconds().count()));
    return buf;
}

Timestamp parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    const bool head_ok = read_digits(text, 0, 4, y) && text.size() > 4 && text[4] == '-' &&
                         read_digits(text, 5, 2, mo) && text.size() > 7 && text[7] == '-' &&
                         read_digits(text, 8, 2, d) && text.size() > 10 && text[10] == 'T' &&
                         read_digits(text, 11, 2, h) && text.size() > 13 && text[13] == ':' &&
                         read_digits(text, 14, 2, mi) && text.size() > 16 && text[16] == ':' &&
                         read_digits(text, 17, 2, s);
    if (!head_ok) {
        throw Error(ErrorKind::invalid_input, "malformed timestamp '" + std::string(text) + "'");
    }
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        if (!read_digits(text, pos + 1, 3, ms)) {
            throw Error(ErrorKind::invalid_input, "malformed timestamp fraction '" + std::string(text) + "'");
        }
        pos += 4;
    }
    if (pos + 1 != text.size() || text[pos] != 'Z') {
        throw Error(ErrorKind::invalid_input, "timestamp must end in 'Z': '" + std::string(text) + "'");
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        throw Error(ErrorKind::invalid_input, "timestamp out of range '" + std::string(text) + "'");
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

std::string utc_date(Timestamp ts) {
    return format_iso8601(ts).substr(0, 10);
}

Timestamp SystemClock::now() const {
    return std::chrono::floor<Millis>(std::chrono::system_clock::now());
}

std::chrono::microseconds SystemClock::monotonic() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::wait(std::chrono::microseconds d) {
    std::this_thread::sleep_for(d);
}

ManualClock::ManualClock(Timestamp start) : start_(start) {}

Timestamp ManualClock::now() const {
    return start_ + std::chrono::duration_cast<Millis>(std::chrono::microseconds{elapsed_us_.load()});
}

std::chrono::microseconds ManualClock::monotonic() const {
    return std::chrono::microseconds{elapsed_us_.load()};
}

void ManualClock::advance(std::chrono::microseconds d) {
    if (d.count() > 0) {
        elapsed_us_.fetch_add(d.count());
    }
}

void ManualClock::advance_to(Timestamp t) {
    const auto target = std::chrono::duration_cast<std::chrono::microseconds>(t - start_).count();
    auto current = elapsed_us_.load();
    while (target > current && !elapsed_us_.compare_exchange_weak(current, target)) {
    }
}

}  // namespace classbot
