#include "distortlab/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distortlab/error.hpp"

namespace distortlab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        return std::stod(s);
    } catch (const std::logic_error&) {
        throw InvalidInput("report: bad number '" + s + "'");
    }
}

ordered_json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

double from_json_number(const ordered_json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string csv_text(const Report& r, bool include_wall_time) {
    std::ostringstream out;
    out << "# schema=" << kReportSchema << '\n';
    out << "# version=" << r.version << '\n';
    out << "# subcommand=" << r.subcommand << '\n';
    for (const auto& [k, v] : r.config) out << "# config." << k << '=' << v << '\n';
    for (const auto& [k, v] : r.scalars) out << "# scalar." << k << '=' << format_double(v) << '\n';
    for (const auto& [k, v] : r.notes) out << "# note." << k << '=' << v << '\n';
    for (const Check& c : r.checks) {
        out << "# check." << c.name << '=' << (c.pass ? "pass" : "fail") << ",measured="
            << format_double(c.measured) << ",limit=" << format_double(c.limit) << '\n';
    }
    out << "# pass=" << (r.passed() ? "true" : "false") << '\n';
    if (include_wall_time) out << "# wall_time_s=" << format_double(r.wall_time_s) << '\n';
    for (std::size_t i = 0; i < r.table.columns.size(); ++i) {
        out << r.table.columns[i] << (i + 1 < r.table.columns.size() ? "," : "");
    }
    out << '\n';
    for (const auto& row : r.table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << format_double(row[i]) << (i + 1 < row.size() ? "," : "");
        out << '\n';
    }
    return out.str();
}

std::string json_text(const Report& r, bool include_wall_time) {
    ordered_json j;
    j["schema"] = kReportSchema;
    j["version"] = r.version;
    j["subcommand"] = r.subcommand;
    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : r.config) config[k] = v;
    j["config"] = config;
    ordered_json scalars = ordered_json::object();
    for (const auto& [k, v] : r.scalars) scalars[k] = number(v);
    j["scalars"] = scalars;
    ordered_json notes = ordered_json::object();
    for (const auto& [k, v] : r.notes) notes[k] = v;
    j["notes"] = notes;
    ordered_json checks = ordered_json::array();
    for (const Check& c : r.checks) {
        checks.push_back(ordered_json{{"name", c.name}, {"pass", c.pass},
                                      {"measured", number(c.measured)}, {"limit", number(c.limit)}});
    }
    j["checks"] = checks;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.table.rows) {
        ordered_json jr = ordered_json::array();
        for (double v : row) jr.push_back(number(v));
        rows.push_back(jr);
    }
    j["table"] = ordered_json{{"columns", r.table.columns}, {"rows", rows}};
    j["pass"] = r.passed();
    if (include_wall_time) j["wall_time_s"] = r.wall_time_s;
    return j.dump(2) + "\n";
}

Report parse_json_object(const ordered_json& j);

Report parse_json(const std::string& text) {
    try {
        return parse_json_object(ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("report json: ") + e.what());
    }
}

Report parse_json_object(const ordered_json& j) {
    if (j.value("schema", std::string()) != kReportSchema) throw InvalidInput("report json: unknown schema");
    Report r;
    r.version = j.at("version").get<std::string>();
    r.subcommand = j.at("subcommand").get<std::string>();
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    for (const auto& [k, v] : j.at("scalars").items()) r.scalars.emplace_back(k, from_json_number(v));
    for (const auto& [k, v] : j.at("notes").items()) r.notes.emplace_back(k, v.get<std::string>());
    for (const auto& c : j.at("checks")) {
        r.checks.push_back(Check{c.at("name").get<std::string>(), c.at("pass").get<bool>(),
                                 from_json_number(c.at("measured")), from_json_number(c.at("limit"))});
    }
    r.table.columns = j.at("table").at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("table").at("rows")) {
        std::vector<double> values;
        for (const auto& v : row) values.push_back(from_json_number(v));
        r.table.rows.push_back(std::move(values));
    }
    if (j.contains("wall_time_s")) r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
}

Report parse_csv(const std::string& text) {
    Report r;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            const std::string body = line.substr(2);
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw InvalidInput("report csv: malformed metadata line");
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            if (key == "schema") {
                if (value != kReportSchema) throw InvalidInput("report csv: unknown schema '" + value + "'");
            } else if (key == "version") {
                r.version = value;
            } else if (key == "subcommand") {
                r.subcommand = value;
            } else if (key.rfind("config.", 0) == 0) {
                r.config.emplace_back(key.substr(7), value);
            } else if (key.rfind("scalar.", 0) == 0) {
                r.scalars.emplace_back(key.substr(7), parse_double(value));
            } else if (key.rfind("note.", 0) == 0) {
                r.notes.emplace_back(key.substr(5), value);
            } else if (key.rfind("check.", 0) == 0) {
                const auto parts = split(value, ',');
                if (parts.size() != 3) throw InvalidInput("report csv: malformed check line");
                Check c;
                c.name = key.substr(6);
                c.pass = parts[0] == "pass";
                c.measured = parse_double(parts[1].substr(parts[1].find('=') + 1));
                c.limit = parse_double(parts[2].substr(parts[2].find('=') + 1));
                r.checks.push_back(c);
            } else if (key == "wall_time_s") {
                r.wall_time_s = parse_double(value);
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (!line.empty()) r.table.columns = split(line, ',');
            continue;
        }
        if (line.empty()) continue;
        std::vector<double> row;
        for (const std::string& cell : split(line, ',')) row.push_back(parse_double(cell));
        r.table.rows.push_back(std::move(row));
    }
    return r;
}

}  // namespace

ReportFormat parse_format(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw InvalidInput("unknown report format '" + name + "' (expected csv or json)");
}

bool Report::passed() const {
    for (const Check& c : checks)
        if (!c.pass) return false;
    return true;
}

double Report::scalar(const std::string& name) const {
    for (const auto& [k, v] : scalars)
        if (k == name) return v;
    throw InvalidInput("report has no scalar '" + name + "'");
}

std::string serialize_report(const Report& report, ReportFormat format, bool include_wall_time) {
    return format == ReportFormat::Csv ? csv_text(report, include_wall_time)
                                       : json_text(report, include_wall_time);
}

Report parse_report(const std::string& text, ReportFormat format) {
    return format == ReportFormat::Csv ? parse_csv(text) : parse_json(text);
}

}  // namespace distortlab
