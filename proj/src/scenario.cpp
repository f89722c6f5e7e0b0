#include "hesslab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hesslab/bench.hpp"
#include "hesslab/verify.hpp"
#include "hesslab/version.hpp"

namespace hesslab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

long long parse_int(const std::string& text, int line, int col) {
    try {
        size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw ParseError(line, col, "trailing characters after integer");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(line, col, "expected an integer, got '" + text + "'");
    }
}

std::uint64_t parse_u64(const std::string& text, int line, int col) {
    try {
        size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw ParseError(line, col, "trailing characters after integer");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(line, col, "expected a nonnegative integer, got '" + text + "'");
    }
}

double parse_num(const std::string& text, int line, int col) {
    try {
        size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v))
            throw ParseError(line, col, "bad number '" + text + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(line, col, "expected a number, got '" + text + "'");
    }
}

} // namespace

Scenario parse_scenario(std::istream& in, const std::string& origin) {
    Scenario sc;
    std::set<std::string> seen;
    std::string raw;
    int lineno = 0;
    int controls_line = 0, controls_col = 1;
    const std::set<std::string> known = {
        "version", "name", "dim", "grid_h", "problems", "ell", "q", "eps",
        "gap_tol", "zero_tol", "structure_samples", "seed", "out_dir", "negative_controls"};

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;

        const size_t eq = line.find('=');
        const int key_col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
        if (eq == std::string::npos)
            throw ParseError(lineno, key_col, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const int val_col = static_cast<int>(eq) + 2;
        if (key.empty()) throw ParseError(lineno, key_col, "missing key before '='");
        if (!known.count(key)) throw ParseError(lineno, key_col, "unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ParseError(lineno, key_col, "duplicate key '" + key + "'");
        if (value.empty()) throw ParseError(lineno, val_col, "missing value for '" + key + "'");

        if (key == "version") {
            sc.version = static_cast<int>(parse_int(value, lineno, val_col));
            if (sc.version != 1)
                throw ParseError(lineno, val_col,
                                 "unsupported version " + std::to_string(sc.version));
        } else if (key == "name") {
            sc.name = value;
        } else if (key == "dim") {
            sc.dim = static_cast<int>(parse_int(value, lineno, val_col));
            if (sc.dim < 2 || sc.dim > 4)
                throw ParseError(lineno, val_col, "dim must be between 2 and 4");
        } else if (key == "grid_h") {
            sc.grid_h = parse_num(value, lineno, val_col);
            if (sc.grid_h <= 0) throw ParseError(lineno, val_col, "grid_h must be positive");
        } else if (key == "problems") {
            sc.problems = split_list(value);
            if (sc.problems.empty())
                throw ParseError(lineno, val_col, "problems list is empty");
            const auto names = problem_names();
            for (const auto& p : sc.problems)
                if (std::find(names.begin(), names.end(), p) == names.end())
                    throw ParseError(lineno, val_col, "unknown problem '" + p + "'");
        } else if (key == "ell") {
            sc.ell.clear();
            for (const auto& tok : split_list(value)) {
                const long long v = parse_int(tok, lineno, val_col);
                if (v < 1) throw ParseError(lineno, val_col, "ell entries must be >= 1");
                sc.ell.push_back(static_cast<int>(v));
            }
            if (sc.ell.empty()) throw ParseError(lineno, val_col, "ell list is empty");
        } else if (key == "q") {
            sc.q.clear();
            for (const auto& tok : split_list(value)) {
                const double v = parse_num(tok, lineno, val_col);
                if (v <= 0) throw ParseError(lineno, val_col, "q entries must be positive");
                sc.q.push_back(v);
            }
            if (sc.q.empty()) throw ParseError(lineno, val_col, "q list is empty");
        } else if (key == "eps") {
            sc.eps.clear();
            for (const auto& tok : split_list(value)) {
                const double v = parse_num(tok, lineno, val_col);
                if (v <= 0) throw ParseError(lineno, val_col, "eps entries must be positive");
                if (!sc.eps.empty() && v >= sc.eps.back())
                    throw ParseError(lineno, val_col, "eps schedule must be strictly decreasing");
                sc.eps.push_back(v);
            }
            if (sc.eps.empty()) throw ParseError(lineno, val_col, "eps list is empty");
        } else if (key == "gap_tol") {
            sc.gap_tol = parse_num(value, lineno, val_col);
            if (sc.gap_tol < 0) throw ParseError(lineno, val_col, "gap_tol must be nonnegative");
        } else if (key == "zero_tol") {
            sc.zero_tol = parse_num(value, lineno, val_col);
            if (sc.zero_tol < 0)
                throw ParseError(lineno, val_col, "zero_tol must be nonnegative");
        } else if (key == "structure_samples") {
            const long long v = parse_int(value, lineno, val_col);
            if (v < 1) throw ParseError(lineno, val_col, "structure_samples must be >= 1");
            sc.structure_samples = static_cast<int>(v);
        } else if (key == "seed") {
            sc.seed = parse_u64(value, lineno, val_col);
        } else if (key == "out_dir") {
            sc.out_dir = value;
        } else if (key == "negative_controls") {
            sc.negative_controls = split_list(value);
            controls_line = lineno;
            controls_col = val_col;
        }
    }

    if (!seen.count("version"))
        throw ParseError(lineno + 1, 1, "missing required key 'version'");
    if (!seen.count("problems"))
        throw ParseError(lineno + 1, 1, "missing required key 'problems'");
    if (sc.name.empty()) {
        const size_t slash = origin.find_last_of("/\\");
        std::string base = slash == std::string::npos ? origin : origin.substr(slash + 1);
        const size_t dot = base.find_last_of('.');
        if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
        sc.name = base.empty() ? "scenario" : base;
    }
    for (const auto& c : sc.negative_controls)
        if (std::find(sc.problems.begin(), sc.problems.end(), c) == sc.problems.end())
            throw ParseError(controls_line, controls_col,
                             "negative control '" + c + "' is not in the problems list");
    return sc;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open scenario file " + path);
    return parse_scenario(in, path);
}

namespace {

ordered_json outcome_json(const CheckOutcome& c) {
    return ordered_json{{"value", c.value}, {"bound", c.bound}, {"pass", c.pass}};
}

ordered_json validation_json(const ValidationReport& v, const TestProblem& prob) {
    ordered_json j;
    j["convexity"] = outcome_json(v.convexity);
    j["residual"] = outcome_json(v.residual);
    if (v.ellipticity_ok) {
        j["ellipticity"] = ordered_json{{"min_eig", v.ellipticity.min_eig},
                                        {"max_eig", v.ellipticity.max_eig},
                                        {"lambda", v.ellipticity.lambda}};
    } else {
        j["ellipticity"] = ordered_json{{"error", v.ellipticity_message}};
    }
    if (v.structure) {
        j["structure"] = ordered_json{
            {"expected", prob.structure == StructureExpectation::pass ? "pass" : "fail"},
            {"pass", v.structure->pass},
            {"samples", v.structure->samples},
            {"retries", v.structure->retries},
            {"min_gap", v.structure->min_gap},
            {"min_gap_scale", v.structure->min_gap_scale},
            {"matches", v.structure_matches}};
    } else {
        j["structure"] = nullptr;
    }
    j["pass"] = v.pass;
    return j;
}

struct StageClock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double lap() {
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        t0 = t1;
        return ms;
    }
};

} // namespace

RunOutcome run_scenario(const Scenario& sc, bool verbose, std::ostream* log) {
    RunOutcome out;
    auto note = [&](const std::string& stage, double ms) {
        out.timings_ms.emplace_back(stage, ms);
        if (verbose && log) *log << "[time] " << stage << ": " << ms << " ms\n";
    };
    auto failed = [&](const std::string& msg) {
        ++out.failures;
        out.failure_messages.push_back(msg);
        if (verbose && log) *log << "[fail] " << msg << "\n";
    };

    StageClock clock;
    const GridPtr grid = Grid::build(sc.dim, sc.grid_h, 1.0);
    note("grid", clock.lap());

    ordered_json report;
    report["schema"] = kReportSchema;
    report["generator"] = ordered_json{{"name", "hesslab"}, {"version", kVersion}};
    report["name"] = sc.name;
    report["dim"] = sc.dim;
    report["grid"] = ordered_json{
        {"spacing", sc.grid_h}, {"radius", 1.0}, {"points", grid->size()}};
    report["seed"] = sc.seed;
    report["eps_schedule"] = sc.eps;
    report["problems"] = ordered_json::array();

    std::vector<TestProblem> cat;
    bool cat_built = false;
    auto get_problem = [&](const std::string& name) -> TestProblem {
        if (name == "radial_smooth") return make_radial_problem(sc.dim, grid);
        if (!cat_built) {
            cat = catalog(sc.dim, grid);
            cat_built = true;
        }
        for (auto& p : cat)
            if (p.name == name) return p;
        fail(ErrorKind::config, "unknown problem '" + name + "'");
    };
    const Region region{Vec(static_cast<size_t>(sc.dim), 0.0), 0.5};

    for (const std::string& name : sc.problems) {
        ordered_json pj;
        pj["problem"] = name;
        const bool control =
            std::find(sc.negative_controls.begin(), sc.negative_controls.end(), name) !=
            sc.negative_controls.end();
        try {
            const TestProblem prob = get_problem(name);
            note(name + "/build", clock.lap());

            const EigenField e = hessian_eigenfield(prob.solution, true);
            const double zero_tol = sc.zero_tol > 0 ? sc.zero_tol : default_zero_tol(e);
            const double gap_tol = sc.gap_tol > 0 ? sc.gap_tol : default_gap_tol(e);
            pj["zero_tol"] = zero_tol;
            pj["gap_tol"] = gap_tol;

            const ValidationReport val = validate(prob, sc.seed, sc.structure_samples);
            pj["validation"] = validation_json(val, prob);
            if (!val.pass) failed("problem " + name + ": validation failed");
            note(name + "/validate", clock.lap());

            const RankMap rm = rank_map(e, zero_tol);
            ordered_json rj;
            rj["constant"] = rm.constant;
            if (rm.constant) rj["rank"] = rm.rank;
            ordered_json counts = ordered_json::object();
            for (const auto& kv : rm.counts) counts[std::to_string(kv.first)] = kv.second;
            rj["counts"] = counts;
            rj["tol"] = rm.tol;
            bool rank_ok;
            if (prob.rank_constant) {
                rank_ok = rm.constant && rm.rank == prob.expected_rank;
                rj["expected"] = prob.expected_rank;
            } else {
                std::set<int> got;
                for (const auto& kv : rm.counts) got.insert(kv.first);
                rank_ok = got == std::set<int>(prob.expected_ranks.begin(),
                                               prob.expected_ranks.end());
                rj["expected"] = prob.expected_ranks;
            }
            rj["pass"] = rank_ok;
            pj["rank"] = rj;
            if (!rank_ok) failed("problem " + name + ": rank classification mismatch");
            note(name + "/rank", clock.lap());

            pj["harnack"] = ordered_json::array();
            bool saw_inconsistent = false;
            for (int ell : sc.ell) {
                if (ell > sc.dim) continue;
                for (double q : sc.q) {
                    const HarnackVerdict hv = harnack_verdict(e, ell, q, region, zero_tol);
                    pj["harnack"].push_back(ordered_json{{"ell", hv.ell},
                                                         {"q", hv.q},
                                                         {"status", to_string(hv.status)},
                                                         {"lq_average", hv.lq_average},
                                                         {"infimum", hv.infimum},
                                                         {"ratio", hv.ratio}});
                    if (hv.status == HarnackStatus::inconsistent) {
                        saw_inconsistent = true;
                        if (!control)
                            failed("problem " + name + ": eigenvalue " +
                                   std::to_string(ell) +
                                   " degenerates on the region while its L^q average does "
                                   "not (q=" +
                                   std::to_string(q) + ")");
                    }
                }
            }
            if (control && !saw_inconsistent)
                failed("problem " + name +
                       ": declared negative control never produced an inconsistent verdict");
            note(name + "/harnack", clock.lap());

            pj["subsolution"] = ordered_json::array();
            for (int ell : sc.ell) {
                if (ell > sc.dim) continue;
                for (double eps : sc.eps) {
                    const SubsolutionReport sr =
                        r_subsolution_constant(*prob.op, prob.solution, ell, eps, gap_tol);
                    pj["subsolution"].push_back(ordered_json{{"ell", sr.ell},
                                                             {"eps", sr.eps},
                                                             {"c_star", sr.c_star},
                                                             {"evaluated", sr.evaluated},
                                                             {"excluded", sr.excluded}});
                }
            }
            note(name + "/subsolution", clock.lap());

            pj["chain"] = ordered_json::array();
            for (int ell : sc.ell) {
                if (ell > sc.dim) continue;
                const ChainReport cr =
                    gradient_chain_bound(prob.solution, ell, sc.eps.back(), gap_tol);
                pj["chain"].push_back(ordered_json{{"ell", cr.ell},
                                                   {"eps", cr.eps},
                                                   {"constant", cr.constant},
                                                   {"evaluated", cr.evaluated},
                                                   {"skipped_trivial", cr.skipped_trivial},
                                                   {"excluded", cr.excluded}});
            }
            note(name + "/chain", clock.lap());
        } catch (const Error& err) {
            pj["error"] = err.what();
            failed("problem " + name + ": " + err.what());
        }
        report["problems"].push_back(pj);
    }

    report["failures"] = out.failures;
    out.report_json = report.dump(2) + "\n";
    out.exit_code = out.failures > 0 ? 1 : 0;

    if (!sc.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(sc.out_dir, ec);
        require(!ec, ErrorKind::io, "cannot create output directory " + sc.out_dir);
        out.report_path = sc.out_dir + "/" + sc.name + ".report.json";
        std::ofstream os(out.report_path, std::ios::binary);
        require(os.good(), ErrorKind::io, "cannot write " + out.report_path);
        os << out.report_json;
        require(os.good(), ErrorKind::io, "failed writing " + out.report_path);
    }
    return out;
}

std::vector<std::string> dump_fields(const std::string& problem, int dim, double grid_h,
                                     const std::string& out_dir) {
    require(!out_dir.empty(), ErrorKind::parameter, "dump needs an output directory");
    const GridPtr grid = Grid::build(dim, grid_h, 1.0);
    const TestProblem prob = lookup_problem(problem, dim, grid);
    const EigenField e = hessian_eigenfield(prob.solution, true);
    const RankMap rm = rank_map(e, default_zero_tol(e));

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec, ErrorKind::io, "cannot create output directory " + out_dir);

    std::vector<std::string> written;
    auto emit = [&](const ScalarField& f, const std::string& file) {
        const std::string path = out_dir + "/" + file;
        write_csv_file(f, path);
        written.push_back(path);
    };
    emit(prob.solution, "u.csv");
    for (int k = 1; k <= e.dim; ++k) {
        emit(lambda_field(e, k), "lambda_" + std::to_string(k) + ".csv");
        emit(q_field(e, k), "q_" + std::to_string(k) + ".csv");
    }
    ScalarField rank_field;
    rank_field.grid = rm.grid;
    rank_field.name = "rank";
    rank_field.values.assign(rm.ranks.begin(), rm.ranks.end());
    emit(rank_field, "rank.csv");

    const std::string eigen_path = out_dir + "/eigen.csv";
    std::ofstream os(eigen_path, std::ios::binary);
    require(os.good(), ErrorKind::io, "cannot write " + eigen_path);
    write_eigen_csv(e, os);
    require(os.good(), ErrorKind::io, "failed writing " + eigen_path);
    written.push_back(eigen_path);
    return written;
}

} // namespace hesslab
