#include <gtest/gtest.h>

#include <cmath>

#include "distortlab/error.hpp"
#include "distortlab/report.hpp"

using namespace distortlab;

namespace {

Report sample_report() {
    Report r;
    r.subcommand = "tail";
    r.version = "9.9.9";
    r.config = {{"dim", "2"}, {"lambdas", "1,2"}};
    r.scalars = {{"eps_hat", 0.1}, {"tiny", 1e-300}, {"third", 1.0 / 3.0}, {"neg", -2.5e17}};
    r.notes = {{"warning", "rank, deficient"}};
    r.checks = {{"a", true, 0.25, 1.0}, {"b", false, 3.0, 2.0}};
    r.table.columns = {"lambda", "fraction"};
    r.table.rows = {{1.0, 0.3678794411714423}, {2.0, 0.1}};
    r.wall_time_s = 0.125;
    return r;
}

void expect_equal(const Report& a, const Report& b) {
    EXPECT_EQ(a.subcommand, b.subcommand);
    EXPECT_EQ(a.version, b.version);
    EXPECT_EQ(a.config, b.config);
    EXPECT_EQ(a.scalars, b.scalars);
    EXPECT_EQ(a.notes, b.notes);
    ASSERT_EQ(a.checks.size(), b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        EXPECT_EQ(a.checks[i].name, b.checks[i].name);
        EXPECT_EQ(a.checks[i].pass, b.checks[i].pass);
        EXPECT_EQ(a.checks[i].measured, b.checks[i].measured);
        EXPECT_EQ(a.checks[i].limit, b.checks[i].limit);
    }
    EXPECT_EQ(a.table.columns, b.table.columns);
    EXPECT_EQ(a.table.rows, b.table.rows);
    EXPECT_EQ(a.wall_time_s, b.wall_time_s);
}

}  // namespace

TEST(Report, RoundTripsBothFormats) {
    const Report r = sample_report();
    for (ReportFormat f : {ReportFormat::Csv, ReportFormat::Json}) {
        const std::string text = serialize_report(r, f);
        expect_equal(parse_report(text, f), r);
        EXPECT_EQ(serialize_report(parse_report(text, f), f), text);
    }
}

TEST(Report, PassIsConjunctionOfChecks) {
    Report r = sample_report();
    EXPECT_FALSE(r.passed());
    r.checks[1].pass = true;
    EXPECT_TRUE(r.passed());
    EXPECT_DOUBLE_EQ(r.scalar("eps_hat"), 0.1);
    EXPECT_THROW(r.scalar("missing"), InvalidInput);
}

TEST(Report, EmptyTableGivesHeaderOnly) {
    Report r;
    r.subcommand = "tail";
    r.table.columns = {"lambda", "fraction", "bound", "pass"};
    const std::string csv = serialize_report(r, ReportFormat::Csv, false);
    const auto last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
    EXPECT_EQ(last, "lambda,fraction,bound,pass\n");
    EXPECT_TRUE(parse_report(csv, ReportFormat::Csv).table.rows.empty());
}

TEST(Report, WallTimeOmittable) {
    Report a = sample_report();
    Report b = sample_report();
    b.wall_time_s = 99.0;
    for (ReportFormat f : {ReportFormat::Csv, ReportFormat::Json}) {
        EXPECT_EQ(serialize_report(a, f, false), serialize_report(b, f, false));
        EXPECT_NE(serialize_report(a, f, true), serialize_report(b, f, true));
    }
}

TEST(Report, JsonKeyOrderAndNonFinite) {
    Report r = sample_report();
    r.scalars.emplace_back("undefined", std::nan(""));
    const std::string j = serialize_report(r, ReportFormat::Json);
    const std::vector<std::string> keys = {"\"schema\"", "\"version\"", "\"subcommand\"", "\"config\"", "\"scalars\"",
                                           "\"notes\"", "\"checks\"", "\"table\"", "\"pass\"", "\"wall_time_s\""};
    std::size_t pos = 0;
    for (const std::string& k : keys) {
        const std::size_t at = j.find("\n  " + k);
        ASSERT_NE(at, std::string::npos) << k;
        EXPECT_GE(at, pos) << k;
        pos = at;
    }
    EXPECT_NE(j.find("\"undefined\": null"), std::string::npos);
    EXPECT_TRUE(std::isnan(parse_report(j, ReportFormat::Json).scalar("undefined")));
}

TEST(Report, RejectsForeignSchemaAndFormat) {
    EXPECT_THROW(parse_format("xml"), InvalidInput);
    EXPECT_THROW(parse_report("{\"schema\": \"other/1\"}", ReportFormat::Json), InvalidInput);
    EXPECT_THROW(parse_report("not json", ReportFormat::Json), InvalidInput);
    EXPECT_THROW(parse_report("# schema=other/1\na,b\n", ReportFormat::Csv), InvalidInput);
}
