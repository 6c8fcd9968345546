#pragma once

#include <string>
#include <utility>
#include <vector>

namespace distortlab {

inline constexpr const char* kReportSchema = "distortlab-report/1";

enum class ReportFormat { Csv, Json };

ReportFormat parse_format(const std::string& name);

struct Check {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double limit = 0.0;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Everything a subcommand emits. Field order is the serialization order.
struct Report {
    std::string subcommand;
    std::string version;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<Check> checks;
    Table table;
    double wall_time_s = 0.0;

    bool passed() const;
    double scalar(const std::string& name) const;
};

/// CSV: '#'-prefixed metadata lines (schema, version, subcommand, config.*,
/// scalar.*, note.*, check.*, pass, wall_time_s) followed by the table header
/// and rows. JSON: an object with keys in the same order. Numbers in CSV use
/// 17 significant digits; JSON numbers use the shortest round-trip form.
std::string serialize_report(const Report& report, ReportFormat format, bool include_wall_time = true);

Report parse_report(const std::string& text, ReportFormat format);

}  // namespace distortlab
