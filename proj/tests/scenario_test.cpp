#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hesslab/scenario.hpp"

using namespace hesslab;

namespace {

Scenario parse_text(const std::string& text, const std::string& origin = "test.scn") {
    std::istringstream in(text);
    return parse_scenario(in, origin);
}

// Captures line/column of the ParseError raised by `text`.
std::pair<int, int> parse_position(const std::string& text) {
    try {
        (void)parse_text(text);
    } catch (const ParseError& e) {
        return {e.line(), e.column()};
    }
    return {-1, -1};
}

} // namespace

TEST_CASE("scenario defaults and name derivation") {
    const Scenario sc = parse_text("version = 1\nproblems = quad_full\n", "dir/my_case.scn");
    CHECK(sc.version == 1);
    CHECK(sc.name == "my_case"); // basename, extension stripped
    CHECK(sc.dim == 2);
    CHECK(sc.grid_h == 0.0625);
    CHECK(sc.problems == std::vector<std::string>{"quad_full"});
    CHECK(sc.ell == std::vector<int>{1});
    CHECK(sc.eps.size() == 4);
    CHECK(sc.gap_tol == 0.0);
    CHECK(sc.seed == 0);

    const Scenario named = parse_text("version = 1\nname = custom\nproblems = quad_full\n");
    CHECK(named.name == "custom");
}

TEST_CASE("scenario full key coverage and comments") {
    const std::string text =
        "# comment line\n"
        "version = 1\n"
        "dim = 3\n"
        "grid_h = 0.125\n"
        "problems = quad_full, rank_control # trailing comment\n"
        "ell = 1, 2, 3\n"
        "q = 0.25, 1\n"
        "eps = 0.1, 0.001\n"
        "gap_tol = 1e-5\n"
        "zero_tol = 1e-7\n"
        "structure_samples = 50\n"
        "seed = 12345\n"
        "out_dir = out\n"
        "negative_controls = rank_control\n";
    const Scenario sc = parse_text(text);
    CHECK(sc.dim == 3);
    CHECK(sc.grid_h == 0.125);
    CHECK(sc.problems.size() == 2);
    CHECK(sc.ell == std::vector<int>{1, 2, 3});
    CHECK(sc.q == std::vector<double>{0.25, 1.0});
    CHECK(sc.eps == std::vector<double>{0.1, 0.001});
    CHECK(sc.gap_tol == 1e-5);
    CHECK(sc.zero_tol == 1e-7);
    CHECK(sc.structure_samples == 50);
    CHECK(sc.seed == 12345);
    CHECK(sc.out_dir == "out");
    CHECK(sc.negative_controls == std::vector<std::string>{"rank_control"});
}

TEST_CASE("parse errors carry line and column") {
    // Unknown key: position of the key itself.
    CHECK(parse_position("version = 1\nbogus = 3\nproblems = quad_full\n") ==
          std::pair<int, int>{2, 1});
    // Indented key: column counts from the first non-blank character.
    CHECK(parse_position("version = 1\n   bogus = 3\nproblems = quad_full\n") ==
          std::pair<int, int>{2, 4});
    // Bad value: position just after the '='.
    CHECK(parse_position("version = 2\nproblems = quad_full\n") == std::pair<int, int>{1, 10});
    // Line without '='.
    CHECK(parse_position("version = 1\nnonsense\nproblems = quad_full\n").first == 2);
    // Missing required keys are reported past the last line.
    CHECK(parse_position("version = 1\n") == std::pair<int, int>{2, 1});

    CHECK_THROWS_AS((void)parse_text("version = 1\nversion = 1\nproblems = quad_full\n"),
                    ParseError); // duplicate
    CHECK_THROWS_AS((void)parse_text("version = 1\nproblems = mystery\n"), ParseError);
    CHECK_THROWS_AS((void)parse_text("version = 1\nproblems = quad_full\ndim = 5\n"),
                    ParseError);
    CHECK_THROWS_AS((void)parse_text("version = 1\nproblems = quad_full\neps = 0.1, 0.1\n"),
                    ParseError); // not strictly decreasing
    CHECK_THROWS_AS((void)parse_text("version = 1\nproblems = quad_full\ngrid_h = -1\n"),
                    ParseError);
    CHECK_THROWS_AS((void)parse_text("version = 1\nproblems = quad_full\nell = 0\n"),
                    ParseError);
    CHECK_THROWS_AS(
        (void)parse_text(
            "version = 1\nproblems = quad_full\nnegative_controls = rank_control\n"),
        ParseError); // control not among the problems
    CHECK_THROWS_AS((void)parse_scenario_file("/nonexistent/path.scn"), Error);
}

TEST_CASE("scenario runs are deterministic byte for byte") {
    Scenario sc = parse_text("version = 1\n"
                             "name = determinism\n"
                             "problems = quad_rank1\n"
                             "grid_h = 0.125\n"
                             "ell = 1, 2\n"
                             "structure_samples = 200\n"
                             "seed = 9\n");
    sc.out_dir.clear(); // no file writes from unit tests
    const RunOutcome a = run_scenario(sc);
    const RunOutcome b = run_scenario(sc);
    CHECK(a.exit_code == 0);
    CHECK(a.failures == 0);
    CHECK(a.report_path.empty());
    CHECK(a.report_json == b.report_json);
    CHECK(!a.timings_ms.empty()); // timings measured but live outside the report
    CHECK(a.report_json.find("timing") == std::string::npos);
}

TEST_CASE("report carries the normative fields") {
    Scenario sc = parse_text("version = 1\n"
                             "name = fields\n"
                             "problems = quad_full\n"
                             "grid_h = 0.125\n"
                             "structure_samples = 200\n");
    sc.out_dir.clear();
    const RunOutcome out = run_scenario(sc);
    const auto rep = nlohmann::json::parse(out.report_json);

    CHECK(rep.at("schema").get<int>() == 1);
    CHECK(rep.at("generator").at("name").get<std::string>() == "hesslab");
    CHECK(rep.at("name").get<std::string>() == "fields");
    CHECK(rep.at("dim").get<int>() == 2);
    CHECK(rep.at("grid").at("spacing").get<double>() == 0.125);
    CHECK(rep.at("eps_schedule").size() == 4);
    REQUIRE(rep.at("problems").size() == 1);
    const auto& pj = rep.at("problems").at(0);
    for (const char* key : {"problem", "zero_tol", "gap_tol", "validation", "rank",
                            "harnack", "subsolution", "chain"})
        CHECK(pj.contains(key));
    CHECK(pj.at("rank").at("constant").get<bool>());
    CHECK(pj.at("rank").at("rank").get<int>() == 2);
    CHECK(pj.at("validation").at("pass").get<bool>());
}

TEST_CASE("negative controls gate the inconsistent verdict") {
    const std::string base = "version = 1\n"
                             "problems = rank_control\n"
                             "grid_h = 0.125\n"
                             "structure_samples = 200\n";

    // Undeclared: the inconsistent Harnack ratio is a failure.
    Scenario undeclared = parse_text(base, "undeclared.scn");
    undeclared.out_dir.clear();
    const RunOutcome bad = run_scenario(undeclared);
    CHECK(bad.exit_code == 1);
    CHECK(bad.failures > 0);

    // Declared: the control must fire, and then it is the expected outcome.
    Scenario declared = parse_text(base + "negative_controls = rank_control\n", "declared.scn");
    declared.out_dir.clear();
    const RunOutcome ok = run_scenario(declared);
    CHECK(ok.exit_code == 0);
    CHECK(ok.failures == 0);

    // Declared but never firing: that is itself a failure.
    Scenario dud = parse_text("version = 1\n"
                              "problems = quad_full\n"
                              "grid_h = 0.125\n"
                              "structure_samples = 200\n"
                              "negative_controls = quad_full\n",
                              "dud.scn");
    dud.out_dir.clear();
    const RunOutcome missed = run_scenario(dud);
    CHECK(missed.exit_code == 1);
    CHECK(missed.failures > 0);
}

TEST_CASE("field dumps write one csv per derived quantity") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hesslab_dump_test";
    fs::remove_all(dir);

    const auto written = dump_fields("quad_rank1", 2, 0.25, dir.string());
    // u, lambda_1, lambda_2, q_1, q_2, rank, eigen.
    CHECK(written.size() == 7);
    for (const auto& path : written) {
        CAPTURE(path);
        CHECK(fs::exists(path));
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header.rfind("x_1,", 0) == 0);
    }
    fs::remove_all(dir);
}
