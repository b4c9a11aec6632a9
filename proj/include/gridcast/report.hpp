#pragma once

#include "gridcast/harness.hpp"

#include <filesystem>
#include <string>

namespace gridcast {

enum class ReportFormat { json, csv, md };
ReportFormat parse_report_format(std::string_view name);

inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kTimingFile = "timing.json";
std::string accuracy_file(Target target);

// Shortest text that parses back to the same double.
std::string format_number(double v);

std::string summary_csv(const BenchmarkReport& report);
std::string accuracy_csv(const BenchmarkReport& report, Target target);
std::string errors_csv(const CellResult& cell);
std::string report_json(const BenchmarkReport& report);
std::string timing_json(const BenchmarkReport& report);
std::string render_markdown(const BenchmarkReport& report);
// Text printed by `run` and `report` in the chosen format.
std::string render(const BenchmarkReport& report, ReportFormat format);

// Writes report.json, the table CSVs, the per-cell error CSVs and timing.json.
void write_report(const BenchmarkReport& report, const std::filesystem::path& dir);
// Reads a directory written by write_report. Timing is not restored.
BenchmarkReport read_report(const std::filesystem::path& dir);

std::vector<ErrorRow> parse_errors_csv(std::string_view text);

std::string prediction_svg(const CellResult& cell);
std::string error_svg(const CellResult& cell);
// Two charts per successful cell; returns the number of files written.
std::size_t write_svg_charts(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace gridcast
