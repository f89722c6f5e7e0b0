#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hesslab/bench.hpp"
#include "hesslab/scenario.hpp"
#include "hesslab/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"finite-difference laboratory for Hessian eigenvalue inequalities"};
    app.fallthrough();
    app.set_version_flag("--version", std::string(hesslab::kVersion));

    std::uint64_t seed = 0;
    double grid_h = 0.0625;
    bool verbose = false;
    app.add_option("--seed", seed, "override the sampling seed");
    app.add_option("--grid-h", grid_h, "override the grid spacing");
    app.add_flag("--verbose", verbose, "print stage timings as they happen");

    auto* run = app.add_subcommand("run", "run a scenario file and write its JSON report");
    std::string scenario_path;
    run->add_option("scenario", scenario_path, "scenario file (key = value lines)")->required();

    auto* dump = app.add_subcommand("dump", "write CSV fields for one named problem");
    std::string problem, out_dir;
    int dim = 2;
    dump->add_option("problem", problem, "problem name (see list-problems)")->required();
    dump->add_option("out_dir", out_dir, "output directory")->required();
    dump->add_option("--dim", dim, "space dimension (2..4)");

    app.add_subcommand("list-problems", "list the named problems");
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            hesslab::Scenario sc = hesslab::parse_scenario_file(scenario_path);
            if (app.count("--seed")) sc.seed = seed;
            if (app.count("--grid-h")) sc.grid_h = grid_h;
            const hesslab::RunOutcome outcome =
                hesslab::run_scenario(sc, verbose, verbose ? &std::cout : nullptr);
            std::cout << "scenario: " << sc.name << "\n";
            if (!outcome.report_path.empty())
                std::cout << "report: " << outcome.report_path << "\n";
            if (!verbose)
                for (const auto& msg : outcome.failure_messages)
                    std::cout << "[fail] " << msg << "\n";
            std::cout << "result: " << (outcome.exit_code == 0 ? "PASS" : "FAIL") << " ("
                      << outcome.failures << " failures)\n";
            return outcome.exit_code;
        }
        if (dump->parsed()) {
            const auto written = hesslab::dump_fields(problem, dim, grid_h, out_dir);
            for (const auto& path : written) std::cout << path << "\n";
            return 0;
        }
        // list-problems
        for (const auto& name : hesslab::problem_names()) std::cout << name << "\n";
        return 0;
    } catch (const hesslab::ParseError& e) {
        std::cerr << "error: " << scenario_path << ": " << e.what() << "\n";
        return 2;
    } catch (const hesslab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == hesslab::ErrorKind::config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
