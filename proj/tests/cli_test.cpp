#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(HYPERGAME_OPT_EXE) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("hypergame_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::string kSrc = HYPERGAME_SOURCE_DIR;

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("run"), 2);
    EXPECT_EQ(run("run " + kSrc + "/scenarios/table1.scn"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("run " + kSrc + "/scenarios/table1.scn --out /tmp/x --jobs 0"), 2);
}

TEST(Cli, BadScenarioFileExitsTwo) {
    fs::path d = scratch("bad");
    write(d / "bad.scn", "system = fan\n[scenario]\nlabel = a\nmode = wiggle\n");
    EXPECT_EQ(run((d / "bad.scn").string() + " --out " + (d / "out").string()), 2);
    EXPECT_EQ(run("run " + (d / "bad.scn").string() + " --out " + (d / "out").string()), 2);
    EXPECT_EQ(run("run " + (d / "missing.scn").string() + " --out " + (d / "out").string()), 2);
}

TEST(Cli, FailedScenarioExitsOne) {
    fs::path d = scratch("fail");
    write(d / "f.scn", "system = fan\n[scenario]\nlabel = ok\nmode = none\n[scenario]\nlabel = broken\nmode = none\nc_r = -1\n");
    EXPECT_EQ(run("run " + (d / "f.scn").string() + " --out " + (d / "out").string()), 1);
    std::string csv = slurp(d / "out" / "f.csv");
    EXPECT_NE(csv.find("\nok,ok,"), std::string::npos);
    EXPECT_NE(csv.find("\nbroken,ParseError,"), std::string::npos);
    EXPECT_TRUE(fs::exists(d / "out" / "ok_contour.svg"));
    EXPECT_FALSE(fs::exists(d / "out" / "broken_contour.svg"));
}

TEST(Cli, FanTableIsDeterministic) {
    fs::path a = scratch("det_a"), b = scratch("det_b");
    std::string scn = kSrc + "/scenarios/table1.scn";
    ASSERT_EQ(run("run " + scn + " --out " + a.string()), 0);
    ASSERT_EQ(run("run " + scn + " --out " + b.string() + " --jobs 3 --seed 7"), 0);
    for (const char* f : {"table1.csv", "baseline_contour.svg", "double_bluff_contour.svg"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(Cli, EmptyScenarioFileWritesHeader) {
    fs::path d = scratch("empty");
    write(d / "e.scn", "system = fan\n");
    EXPECT_EQ(run("run " + (d / "e.scn").string() + " --out " + (d / "out").string()), 0);
    std::string csv = slurp(d / "out" / "e.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
}
