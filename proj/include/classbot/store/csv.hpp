#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "classbot/core/types.hpp"

namespace classbot::store {

using CsvRow = std::vector<std::string>;

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view value);
/// Joins fields with commas and terminates the record with CRLF.
std::string csv_record(const CsvRow& fields);

/// RFC-4180 parser. Accepts CRLF or LF record ends; a trailing line break
/// does not start a new record. Throws Error{invalid_input} on an
/// unterminated quote or stray characters after a closing quote.
std::vector<CsvRow> parse_csv(std::string_view text);

inline const CsvRow attendance_header{"session_id", "group_id", "code", "student_id", "display_name", "checkin_ts"};
inline const CsvRow survey_header{"survey_id", "question_index", "prompt", "student_id", "response_type", "value", "ts"};

std::string attendance_csv(const AttendanceSession& session);
std::string survey_csv(const SurveyDefinition& survey, const std::vector<SurveyResponse>& responses);

/// What an attendance export carries. The session state is not part of the
/// file, so the result is closed with closed_at unset.
struct AttendanceExport {
    std::string session_id;
    std::string group_id;
    std::string code;
    std::vector<CheckIn> checkins;
};
AttendanceExport parse_attendance_csv(std::string_view text);

struct SurveyExportRow {
    int question_index = 0;
    std::string prompt;
    SurveyResponse response;
};
std::vector<SurveyExportRow> parse_survey_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Files

/// Writes to a sibling temp file and renames it over `path`, so readers see
/// either the old or the new content. Creates parent directories. Throws
/// Error{io}.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Throws Error{io} when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace classbot::store
