#pragma once

#include <iosfwd>
#include <optional>

#include "hesslab/operators.hpp"

namespace hesslab {

enum class StructureExpectation { pass, fail, untested };

// A named problem: operator + solution on a grid + declared expectations.
struct TestProblem {
    std::string name;
    OperatorPtr op;
    ScalarField solution;
    // Expected rank of the Hessian over interior points: fixed value, or
    // nonconstant with the set of ranks that must appear.
    bool rank_constant = true;
    int expected_rank = 0;
    std::vector<int> expected_ranks; // when nonconstant
    StructureExpectation structure = StructureExpectation::untested;
    std::string notes;
    double residual_scale = 1.0; // K in the contract residual <= 10*K*h^2
    // Closed-form reference when one exists (manufactured problems).
    std::function<double(const Vec&)> reference;
    bool expect_harnack_inconsistent = false; // declared negative control
};

// The five standard problems on the given grid (dim 2..4, radius 1):
// quad_full, quad_rank1, logdet_flat, poisson_concave, rank_control.
std::vector<TestProblem> catalog(int dim, const GridPtr& grid);
std::vector<std::string> catalog_names();

// Name lookup over the catalog plus the extra named problems (radial_smooth).
TestProblem lookup_problem(const std::string& name, int dim, const GridPtr& grid);
std::vector<std::string> problem_names();

// Smooth radial benchmark u = g(|x|^2/2), g(s) = s + s^2/2 + s^3/60, with
// matching trace operator; used for derivative-formula convergence studies.
TestProblem make_radial_problem(int dim, const GridPtr& grid);

struct SolveResult {
    ScalarField solution;
    int iterations = 0;
    double residual = 0;           // max-norm of Delta_h u - rhs over unknowns
    std::vector<double> history;   // residual per iteration
};

// Conjugate gradients on the lattice-ball 5/7-point Laplacian: unknowns are
// nodes whose axis stencil stays in the ball, Dirichlet data from `boundary`
// at the remaining nodes. Deterministic. Convergence error (with history) if
// the max-norm algebraic residual is still above tol after max_iter.
SolveResult solve_elliptic(const ScalarField& rhs, const std::function<double(const Vec&)>& boundary,
                           const GridPtr& grid, double tol, int max_iter,
                           std::ostream* iteration_log_csv = nullptr);

struct CheckOutcome {
    bool pass = false;
    double value = 0;
    double bound = 0;
};

struct ValidationReport {
    CheckOutcome convexity;  // min eigenvalue >= -1e-8 * max(1, lambda_max)
    CheckOutcome residual;   // pde_residual <= 10 * K * h^2
    EllipticityReport ellipticity;
    bool ellipticity_ok = false;
    std::string ellipticity_message;
    std::optional<StructureReport> structure; // when declared PASS/FAIL
    bool structure_matches = true;
    bool pass = false;
};

// Convexity, residual-contract, ellipticity, and declared-structure checks
// for one problem. The structure check samples u/p/x boxes from the actual
// solution range.
ValidationReport validate(const TestProblem& problem, std::uint64_t seed,
                          int structure_samples = 10000);

} // namespace hesslab
