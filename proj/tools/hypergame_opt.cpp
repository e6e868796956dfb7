#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <hypergame/acceptance.hpp>
#include <hypergame/report.hpp>

namespace fs = std::filesystem;
using namespace hypergame;

namespace {

int run_command(const std::string& file, const std::string& out_dir, int jobs, int round, unsigned seed) {
    ScenarioFile sf;
    try {
        sf = parse_scenario_file(file);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    log(LogLevel::info, "seed ", seed, ", ", sf.entries.size(), " scenarios, ", jobs, " jobs");
    std::vector<ScenarioResult> rows = run_scenarios(sf, jobs);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create " << out_dir << ": " << ec.message() << '\n';
        return 2;
    }
    fs::path csv = fs::path(out_dir) / (fs::path(file).stem().string() + ".csv");
    {
        std::ofstream os(csv, std::ios::binary);
        if (!os) {
            std::cerr << "error: cannot write " << csv << '\n';
            return 2;
        }
        write_csv(os, sf.system, rows, round);
    }
    log(LogLevel::info, "wrote ", csv.string());
    try {
        for (const auto& f : emit_figures(rows, out_dir)) log(LogLevel::info, "wrote ", f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    int failed = 0;
    for (const auto& r : rows)
        if (!r.ok) {
            ++failed;
            std::cerr << "scenario " << r.label << " failed: " << r.error << ": " << r.message << '\n';
        }
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypergame-opt: attack/defense optimization under misperception"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a scenario file and write CSV and SVG output");
    std::string file, out_dir = "out";
    int jobs = 1, round = -1;
    unsigned seed = 0;
    run->add_option("file", file, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--round", round, "decimals in the CSV (default: full precision)")->check(CLI::NonNegativeNumber);
    run->add_option("--seed", seed, "seed for multi-start offsets");

    auto* verify = app.add_subcommand("verify", "evaluate the acceptance criteria");
    bool quiet = false;
    verify->add_flag("--quiet", quiet, "one line per criterion, no details");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*run) return run_command(file, out_dir, jobs, round, seed);
    auto results = acceptance::run(std::cout, !quiet);
    for (const auto& c : results)
        if (!c.pass) return 1;
    return 0;
}
