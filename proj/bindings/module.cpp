#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hesslab/bench.hpp"
#include "hesslab/scenario.hpp"
#include "hesslab/verify.hpp"
#include "hesslab/version.hpp"

namespace py = pybind11;

namespace {

hesslab::SymMat to_sym(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    hesslab::Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        hesslab::require(static_cast<int>(rows[i].size()) == n, hesslab::ErrorKind::parameter,
                         "matrix rows must all have the same length");
        for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return hesslab::SymMat::from_matrix(m);
}

py::dict summary(const std::string& name, int dim, double h, std::uint64_t seed) {
    using namespace hesslab;
    const GridPtr grid = Grid::build(dim, h, 1.0);
    const TestProblem prob = lookup_problem(name, dim, grid);
    const EigenField e = hessian_eigenfield(prob.solution, true);
    const ValidationReport val = validate(prob, seed);
    const RankMap rm = rank_map(e, default_zero_tol(e));
    const Region region{Vec(static_cast<size_t>(dim), 0.0), 0.5};
    const HarnackVerdict hv = harnack_verdict(e, 1, 0.5, region, default_zero_tol(e));

    py::dict d;
    d["problem"] = prob.name;
    d["pass"] = val.pass;
    d["pde_residual"] = val.residual.value;
    d["residual_bound"] = val.residual.bound;
    d["min_eigenvalue"] = val.convexity.value;
    d["rank_constant"] = rm.constant;
    py::dict counts;
    for (const auto& kv : rm.counts) counts[py::int_(kv.first)] = kv.second;
    d["rank_counts"] = counts;
    d["harnack_status"] = std::string(to_string(hv.status));
    d["harnack_ratio"] = hv.ratio;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "native core: lattice-ball grids, Hessian spectra, operator checks";

    py::register_exception<hesslab::Error>(m, "HesslabError");

    m.def("version", [] { return std::string(hesslab::kVersion); },
          "library version string");
    m.def("list_problems", &hesslab::problem_names, "names accepted by problem functions");
    m.def(
        "eigenvalues",
        [](const std::vector<std::vector<double>>& rows) {
            return hesslab::eigensystem(to_sym(rows)).eigenvalues;
        },
        py::arg("matrix"), "ascending eigenvalues of a symmetric matrix");
    m.def(
        "sigma_k",
        [](const std::vector<std::vector<double>>& rows, int k) {
            return hesslab::sigma_k(to_sym(rows), k);
        },
        py::arg("matrix"), py::arg("k"), "sum of the k smallest eigenvalues");
    m.def(
        "q_weight",
        [](const std::vector<std::vector<double>>& rows, int k) {
            return hesslab::q_weight(to_sym(rows), k);
        },
        py::arg("matrix"), py::arg("k"), "weighted eigenvalue sum Q_k");
    m.def(
        "r_quantity",
        [](const std::vector<std::vector<double>>& rows, int ell, double eps) {
            return hesslab::r_quantity(to_sym(rows), ell, eps);
        },
        py::arg("matrix"), py::arg("ell"), py::arg("eps"),
        "regularized test quantity sum_k sqrt(Q_k + eps)");
    m.def(
        "run_scenario",
        [](const std::string& text, const std::string& out_dir) {
            std::istringstream is(text);
            hesslab::Scenario sc = hesslab::parse_scenario(is, "<python>");
            sc.out_dir = out_dir;
            const hesslab::RunOutcome o = hesslab::run_scenario(sc);
            return py::make_tuple(o.exit_code, o.report_json);
        },
        py::arg("text"), py::arg("out_dir") = std::string(),
        "run a scenario given as text; returns (exit_code, report_json)");
    m.def("dump_fields", &hesslab::dump_fields, py::arg("problem"), py::arg("dim"),
          py::arg("grid_h"), py::arg("out_dir"),
          "write u/lambda/Q/rank/eigen CSV files; returns the written paths");
    m.def("problem_summary", &summary, py::arg("problem"), py::arg("dim") = 2,
          py::arg("grid_h") = 0.0625, py::arg("seed") = 0,
          "validation, rank, and Harnack summary for one named problem");
}
