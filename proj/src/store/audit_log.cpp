#include "classbot/store/audit_log.hpp"

#include <algorithm>
#include <fstream>

#include <spdlog/spdlog.h>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"

namespace classbot::store {

namespace fs = std::filesystem;

namespace {

/// Timestamp of the last parseable line of an existing file, if any.
std::optional<Timestamp> last_timestamp(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::optional<Timestamp> last;
    while (std::getline(in, line)) {
        try {
            last = parse_iso8601(json::parse(line).at("ts").get<std::string>());
        } catch (const std::exception&) {
        }
    }
    return last;
}

}  // namespace

AuditLog::AuditLog(fs::path logs_dir) : dir_(std::move(logs_dir)) {}

AuditLog::~AuditLog() { flush(); }

fs::path AuditLog::file_for(const std::string& utc_date) const { return dir_ / ("audit-" + utc_date + ".jsonl"); }

void AuditLog::append(AuditEvent event) {
    writer_.post([this, event = std::move(event)]() mutable { write(std::move(event)); });
}

void AuditLog::flush() { writer_.drain(); }

void AuditLog::write(AuditEvent event) {
    const std::string date = utc_date(event.ts);
    const fs::path path = file_for(date);
    try {
        auto it = last_ts_.find(date);
        if (it == last_ts_.end()) {
            it = last_ts_.emplace(date, last_timestamp(path).value_or(event.ts)).first;
        }
        event.ts = std::max(event.ts, it->second);
        it->second = event.ts;

        std::error_code ec;
        fs::create_directories(dir_, ec);
        std::ofstream out(path, std::ios::app | std::ios::binary);
        out << json(event).dump() << '\n';
        out.flush();
        if (!out) {
            throw Error(ErrorKind::io, "write failed");
        }
        ++written_;
    } catch (const std::exception& e) {
        ++failures_;
        spdlog::error("audit log: cannot append to {}: {}", path.string(), e.what());
    }
}

std::vector<AuditEvent> read_audit_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open " + path.string());
    }
    std::vector<AuditEvent> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        try {
            out.push_back(json::parse(line).get<AuditEvent>());
        } catch (const std::exception& e) {
            throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::vector<fs::path> audit_files(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("audit-", 0) == 0 && entry.path().extension() == ".jsonl") {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void MemoryAuditSink::append(AuditEvent event) {
    std::lock_guard lock(mu_);
    events_.push_back(std::move(event));
}

std::vector<AuditEvent> MemoryAuditSink::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

void MemoryAuditSink::clear() {
    std::lock_guard lock(mu_);
    events_.clear();
}

}  // namespace classbot::store
