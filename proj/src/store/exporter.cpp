#include "classbot/store/exporter.hpp"

#include "classbot/core/error.hpp"
#include "classbot/store/csv.hpp"

namespace classbot::store {

namespace {

// Ids come from the engine, but they end up in a path.
void check_file_id(const std::string& id) {
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id.front() == '.') {
        throw Error(ErrorKind::invalid_input, "unsafe export id '" + id + "'");
    }
}

}  // namespace

CsvExporter::CsvExporter(std::filesystem::path data_root) : root_(std::move(data_root)) {}

std::filesystem::path CsvExporter::attendance_path(const std::string& session_id) const {
    return root_ / "data" / "attendance" / (session_id + ".csv");
}

std::filesystem::path CsvExporter::survey_path(const std::string& survey_id) const {
    return root_ / "data" / "surveys" / (survey_id + ".csv");
}

std::string CsvExporter::export_attendance(const AttendanceSession& session) {
    check_file_id(session.id);
    auto path = attendance_path(session.id);
    std::string content = attendance_csv(session);
    return writer_.call([path, content = std::move(content)] {
        write_file_atomic(path, content);
        return path.string();
    });
}

std::string CsvExporter::export_survey(const SurveyDefinition& survey, const std::vector<SurveyResponse>& responses) {
    check_file_id(survey.id);
    auto path = survey_path(survey.id);
    std::string content = survey_csv(survey, responses);
    return writer_.call([path, content = std::move(content)] {
        write_file_atomic(path, content);
        return path.string();
    });
}

}  // namespace classbot::store
