#include "classbot/store/csv.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "classbot/core/error.hpp"
#include "classbot/core/serialize.hpp"

namespace classbot::store {

namespace fs = std::filesystem;

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(value);
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_record(const CsvRow& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += csv_field(fields[i]);
    }
    out += "\r\n";
    return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    std::size_t i = 0;
    std::size_t line = 1;
    const std::size_t n = text.size();
    auto end_record = [&] {
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
    };
    while (i < n) {
        if (text[i] == '"') {
            const std::size_t start_line = line;
            ++i;
            for (;;) {
                if (i >= n) {
                    throw Error(ErrorKind::invalid_input,
                                "csv: unterminated quoted field starting on line " + std::to_string(start_line));
                }
                if (text[i] == '"') {
                    if (i + 1 < n && text[i + 1] == '"') {
                        field += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                if (text[i] == '\n') {
                    ++line;
                }
                field += text[i++];
            }
            if (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
                throw Error(ErrorKind::invalid_input, "csv: unexpected character after quote on line " +
                                                          std::to_string(line));
            }
        } else {
            while (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
                if (text[i] == '"') {
                    throw Error(ErrorKind::invalid_input, "csv: quote inside unquoted field on line " +
                                                              std::to_string(line));
                }
                field += text[i++];
            }
        }
        if (i >= n) {
            end_record();
            break;
        }
        if (text[i] == ',') {
            row.push_back(std::move(field));
            field.clear();
            ++i;
            if (i >= n) {
                end_record();
            }
            continue;
        }
        if (text[i] == '\r') {
            ++i;
            if (i >= n || text[i] != '\n') {
                throw Error(ErrorKind::invalid_input, "csv: bare CR on line " + std::to_string(line));
            }
        }
        ++i;
        ++line;
        end_record();
    }
    return rows;
}

std::string attendance_csv(const AttendanceSession& session) {
    std::string out = csv_record(attendance_header);
    for (const auto& c : session.checkins) {
        out += csv_record({session.id, session.group_id, session.code, c.student_id, c.display_name,
                           format_iso8601(c.at)});
    }
    return out;
}

std::string survey_csv(const SurveyDefinition& survey, const std::vector<SurveyResponse>& responses) {
    std::string out = csv_record(survey_header);
    for (const auto& r : responses) {
        const auto q = static_cast<std::size_t>(r.question_index);
        const std::string prompt = q < survey.questions.size() ? survey.questions[q].prompt : std::string{};
        out += csv_record({survey.id, std::to_string(r.question_index), prompt, r.student_id,
                           std::string(to_string(response_type_of(r.value))), value_to_string(r.value), format_iso8601(r.at)});
    }
    return out;
}

namespace {

void expect_header(const std::vector<CsvRow>& rows, const CsvRow& header) {
    if (rows.empty() || rows.front() != header) {
        throw Error(ErrorKind::invalid_input, "csv: missing or unexpected header");
    }
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_input, std::string("csv: bad ") + what + " '" + s + "'");
    }
}

}  // namespace

AttendanceExport parse_attendance_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    expect_header(rows, attendance_header);
    AttendanceExport out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& r = rows[i];
        if (r.size() != attendance_header.size()) {
            throw Error(ErrorKind::invalid_input, "csv: record " + std::to_string(i) + " has " +
                                                      std::to_string(r.size()) + " fields");
        }
        out.session_id = r[0];
        out.group_id = r[1];
        out.code = r[2];
        out.checkins.push_back(CheckIn{r[3], r[4], parse_iso8601(r[5])});
    }
    return out;
}

std::vector<SurveyExportRow> parse_survey_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    expect_header(rows, survey_header);
    std::vector<SurveyExportRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& r = rows[i];
        if (r.size() != survey_header.size()) {
            throw Error(ErrorKind::invalid_input, "csv: record " + std::to_string(i) + " has " +
                                                      std::to_string(r.size()) + " fields");
        }
        SurveyExportRow row;
        row.question_index = parse_int(r[1], "question_index");
        row.prompt = r[2];
        row.response.survey_id = r[0];
        row.response.question_index = row.question_index;
        row.response.student_id = r[3];
        switch (parse_response_type(r[4])) {
            case ResponseType::five_level: row.response.value = Level{parse_int(r[5], "level")}; break;
            case ResponseType::percentage: row.response.value = Percent{parse_int(r[5], "percentage")}; break;
            case ResponseType::free_text: row.response.value = FreeText{r[5]}; break;
        }
        row.response.at = parse_iso8601(r[6]);
        out.push_back(std::move(row));
    }
    return out;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    static std::atomic<std::uint64_t> counter{0};
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            throw Error(ErrorKind::io, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw Error(ErrorKind::io, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace classbot::store
