#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hesslab/common.hpp"

namespace hesslab {

// Flat key = value scenario description, '#' comments, explicit version.
struct Scenario {
    int version = 1;
    std::string name;
    int dim = 2;
    double grid_h = 0.0625;
    std::vector<std::string> problems;
    std::vector<int> ell = {1};
    std::vector<double> q = {0.5};
    std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4}; // strictly decreasing
    double gap_tol = 0;    // 0 = derive (max(1e-6, h^2) * max(1, lambda_max))
    double zero_tol = 0;   // 0 = derive (max(1e-8, h^2) * max(1, lambda_max))
    int structure_samples = 10000;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::vector<std::string> negative_controls; // problems allowed to go inconsistent
};

// Parse error carrying the position; formatted as "line L, column C: ...".
class ParseError : public Error {
  public:
    ParseError(int line, int column, const std::string& msg)
        : Error(ErrorKind::config,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

  private:
    int line_, column_;
};

Scenario parse_scenario(std::istream& in, const std::string& origin = "<stream>");
Scenario parse_scenario_file(const std::string& path);

struct RunOutcome {
    int exit_code = 0;          // 0 ok, 1 check failures, 2 never (parse throws)
    std::string report_json;    // canonical serialized report (byte-stable)
    std::string report_path;    // file written (empty if out_dir empty)
    int failures = 0;
    std::vector<std::string> failure_messages;
    std::vector<std::pair<std::string, double>> timings_ms; // stage -> wall ms
};

// Runs every problem of the scenario: validation, structure expectation, rank
// classification, Harnack verdicts per (ell, q), subsolution constants per
// (ell, eps schedule), gradient chain constants per ell. The JSON report is
// deterministic for a fixed scenario + seed; wall-clock timings stay out of
// it (stdout/sidecar only).
RunOutcome run_scenario(const Scenario& sc, bool verbose = false, std::ostream* log = nullptr);

// Writes u, lambda_1..n, q_1..n, rank CSVs (field format) plus a combined
// eigen.csv for the named problem.
std::vector<std::string> dump_fields(const std::string& problem, int dim, double grid_h,
                                     const std::string& out_dir);

} // namespace hesslab
