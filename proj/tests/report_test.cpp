#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "hypergame/report.hpp"

using namespace hypergame;

namespace {

ScenarioFile parse(const std::string& text) {
    std::istringstream in(text);
    return parse_scenarios(in);
}

ErrorCode code_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::SolverFailure;
}

const char* kFanFile = R"(# two rows
system = fan
budget = 0.1

[scenario]
label = base
mode = none

[scenario]
label = pm   # trailing comment
mode = constraint_powermax
budget = 0.05
)";

}  // namespace

TEST(ScenarioParse, DefaultsAndOverrides) {
    ScenarioFile f = parse(kFanFile);
    EXPECT_EQ(f.system, SystemKind::fan);
    ASSERT_EQ(f.entries.size(), 2u);
    EXPECT_EQ(f.entries[0].label, "base");
    EXPECT_EQ(f.entries[0].values.at("budget"), "0.1");
    EXPECT_EQ(f.entries[1].label, "pm");
    EXPECT_EQ(f.entries[1].values.at("budget"), "0.05");
}

TEST(ScenarioParse, Errors) {
    EXPECT_EQ(code_of("[scenario]\nlabel = a\nmode = none\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = boat\n"), ErrorCode::UnknownMode);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a\nmode = wiggle\n"), ErrorCode::UnknownMode);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a\nmode = hvac_static\n"), ErrorCode::UnknownMode);
    EXPECT_EQ(code_of("system = hvac\n[scenario]\nlabel = a\nmode = theta_true\n"), ErrorCode::UnknownMode);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a\nmode = none\nbelief = psychic\n"), ErrorCode::UnknownMode);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nmode = none\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a b\nmode = none\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a\nmode = none\n[scenario]\nlabel = a\nmode = none\n"),
              ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a\nmode = none\nhorizon = 5\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = fan\n[other]\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nlabel = a\nlabel = b\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("system = fan\n[scenario]\nno equals sign\n"), ErrorCode::ParseError);
}

TEST(ScenarioParse, BadNumberFailsTheRowNotTheFile) {
    ScenarioFile f = parse("system = fan\n[scenario]\nlabel = a\nmode = none\nbudget = lots\n");
    auto rows = run_scenarios(f);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].ok);
    EXPECT_EQ(rows[0].error, "ParseError");
}

TEST(Csv, EmptyScenarioListIsHeaderOnly) {
    ScenarioFile f = parse("system = hvac\n");
    std::ostringstream os;
    write_csv(os, f.system, run_scenarios(f));
    EXPECT_EQ(os.str(),
              "label,status,mode,horizon,budget,baseline_power,power,perceived_power,power_increase_pct,"
              "perceived_increase_pct,dbeta,dgamma,lambda_mean,mu_tau,violation,dT0,kkt_residual\n");
}

TEST(Csv, GoldenFanRows) {
    ScenarioFile f = parse(kFanFile);
    std::ostringstream os;
    write_csv(os, f.system, run_scenarios(f), 4);
    EXPECT_EQ(os.str(),
              "label,status,mode,belief,double_bluff,level,budget,delta_kind,m,p,delta_1,delta_2,delta_3,power,"
              "perceived_power,violation,weighted_violation,kkt_residual\n"
              "base,ok,none,normal,false,game,0.1000,none,2.0552,3.8475,0.0000,0.0000,0.0000,13.9741,13.9741,0.0000,"
              "0.0000,0.0000\n"
              "pm,ok,constraint_powermax,normal,false,second_level,0.0500,c,2.4304,4.1231,0.2116,0.0722,0.2236,"
              "16.5837,16.5837,0.0000,-1.3142,0.0000\n");
}

TEST(Csv, DeterministicAcrossJobCounts) {
    ScenarioFile f = parse(kFanFile);
    std::ostringstream a, b;
    write_csv(a, f.system, run_scenarios(f, 1));
    write_csv(b, f.system, run_scenarios(f, 4));
    EXPECT_EQ(a.str(), b.str());
}

TEST(Csv, FailedRowKeepsColumnCount) {
    ScenarioFile f = parse("system = fan\n[scenario]\nlabel = a\nmode = none\nc_r = -1\n");
    std::ostringstream os;
    write_csv(os, f.system, run_scenarios(f));
    std::string row = os.str().substr(os.str().find('\n') + 1);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), static_cast<long>(csv_columns(SystemKind::fan).size() - 1));
    EXPECT_NE(row.find("ParseError"), std::string::npos);
}

TEST(FormatNumber, RoundingAndNegativeZero) {
    EXPECT_EQ(format_number(-0.0, 2), "0.00");
    EXPECT_EQ(format_number(-1e-9, 3), "0.000");
    EXPECT_EQ(format_number(1.5, 2), "1.50");
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
}

TEST(Svg, DeterministicAndWellFormed) {
    svg::Plot p;
    p.title = "a < b";
    p.series.push_back({"s", {1, 2, 3}, {0.5, 1.5, 1.0}});
    p.circles.push_back({0.0, 0.0, 1.0, "#000", true, "c"});
    p.contours.push_back({[](double x, double y) { return x * x + y * y; }, {0.25, 1.0}, "#888", false, "r"});
    std::string a = svg::render(p), b = svg::render(p);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.rfind("<svg", 0), 0u);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
    EXPECT_NE(a.find("a &lt; b"), std::string::npos);
}

TEST(Svg, MissingSeries) {
    svg::Plot p;
    p.series.push_back({"empty", {}, {}});
    try {
        svg::render(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingSeries);
    }
    p.series[0] = {"ragged", {1, 2}, {1}};
    EXPECT_THROW(svg::render(p), Error);
}

TEST(Svg, ContourOfCircleLiesOnCircle) {
    auto segs = svg::detail::level_segments([](double x, double y) { return x * x + y * y; }, 1.0, {-2, 2, -2, 2}, 80);
    ASSERT_FALSE(segs.empty());
    for (const auto& s : segs) {
        EXPECT_NEAR(std::hypot(s[0], s[1]), 1.0, 1e-2);
        EXPECT_NEAR(std::hypot(s[2], s[3]), 1.0, 1e-2);
    }
}
