#pragma once

#include <filesystem>

#include "classbot/engine/engine.hpp"
#include "classbot/store/writer.hpp"

namespace classbot::store {

/// Writes data/attendance/{session_id}.csv and data/surveys/{survey_id}.csv
/// under a data root. Safe to call from several engines at once; the writes
/// are serialized on one writer thread.
class CsvExporter final : public engine::ExportSink {
public:
    explicit CsvExporter(std::filesystem::path data_root);

    std::string export_attendance(const AttendanceSession& session) override;
    std::string export_survey(const SurveyDefinition& survey, const std::vector<SurveyResponse>& responses) override;

    std::filesystem::path attendance_path(const std::string& session_id) const;
    std::filesystem::path survey_path(const std::string& survey_id) const;

private:
    std::filesystem::path root_;
    WriterQueue writer_;
};

}  // namespace classbot::store
