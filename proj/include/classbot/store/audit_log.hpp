#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "classbot/core/types.hpp"
#include "classbot/store/writer.hpp"

namespace classbot::store {

/// Append-only JSON-lines audit log rotated by UTC date:
/// logs/audit-YYYY-MM-DD.jsonl. append() only enqueues; a writer thread
/// does the file I/O. Write failures are logged and counted, never thrown.
///
/// Within a file, timestamps never decrease: an event older than the last
/// line of its file is stamped with that line's time.
class AuditLog final : public AuditSink {
public:
    explicit AuditLog(std::filesystem::path logs_dir);
    ~AuditLog() override;

    void append(AuditEvent event) override;

    /// Waits until every appended event has been written (or has failed).
    void flush();

    std::uint64_t written() const { return written_; }
    std::uint64_t failures() const { return failures_; }

    std::filesystem::path file_for(const std::string& utc_date) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    void write(AuditEvent event);

    std::filesystem::path dir_;
    /// Touched only on the writer thread.
    std::map<std::string, Timestamp> last_ts_;
    std::atomic<std::uint64_t> written_{0};
    std::atomic<std::uint64_t> failures_{0};
    WriterQueue writer_;
};

/// Parses one audit file; throws Error{invalid_input} naming the bad line.
std::vector<AuditEvent> read_audit_file(const std::filesystem::path& path);

/// Every audit-*.jsonl file in dir, sorted by name (and so by date).
std::vector<std::filesystem::path> audit_files(const std::filesystem::path& dir);

/// Keeps events in memory; used by tests and simulations.
class MemoryAuditSink final : public AuditSink {
public:
    void append(AuditEvent event) override;
    std::vector<AuditEvent> events() const;
    void clear();

private:
    mutable std::mutex mu_;
    std::vector<AuditEvent> events_;
};

}  // namespace classbot::store
