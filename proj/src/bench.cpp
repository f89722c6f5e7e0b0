#include "hesslab/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace hesslab {

namespace {

double sq_norm(const Vec& x) { return dot(x, x); }

TestProblem quad_full_problem(int n, const GridPtr& grid) {
    TestProblem p;
    p.name = "quad_full";
    p.op = make_operator("poisson(" + std::to_string(n) + ")", n);
    auto ref = [](const Vec& x) { return 0.5 * sq_norm(x); };
    p.solution = sample(grid, ref, p.name);
    p.reference = ref;
    p.expected_rank = n;
    p.structure = StructureExpectation::pass;
    p.notes = "isotropic paraboloid; full-rank Hessian, exact under centered differences";
    return p;
}

TestProblem quad_rank1_problem(int n, const GridPtr& grid) {
    TestProblem p;
    p.name = "quad_rank1";
    p.op = make_operator("poisson(1)", n);
    auto ref = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
    p.solution = sample(grid, ref, p.name);
    p.reference = ref;
    p.expected_rank = 1;
    p.structure = StructureExpectation::pass;
    p.notes = "cylinder over one axis; rank-one Hessian everywhere";
    return p;
}

TestProblem logdet_flat_problem(int n, const GridPtr& grid) {
    TestProblem p;
    p.name = "logdet_flat";
    double c = 0;
    for (int k = 1; k <= n; ++k) c += std::log(static_cast<double>(k));
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", c);
    p.op = make_operator(std::string("logdet(") + buf + ")", n);
    auto ref = [n](const Vec& x) {
        double s = 0;
        for (int k = 0; k < n; ++k) s += 0.5 * (k + 1.0) * x[k] * x[k];
        return s;
    };
    p.solution = sample(grid, ref, p.name);
    p.reference = ref;
    p.expected_rank = n;
    p.structure = StructureExpectation::pass;
    p.notes = "anisotropic quadratic solving a constant-determinant equation";
    return p;
}

TestProblem poisson_concave_problem(int n, const GridPtr& grid) {
    TestProblem p;
    p.name = "poisson_concave";
    p.op = make_operator("poisson_rhs(concave)", n);
    auto ref = [n](const Vec& x) {
        const double r2 = sq_norm(x);
        return 3.0 / (2.0 * n) * r2 - r2 * r2 / (8.0 * (n + 2.0));
    };
    const ScalarField rhs =
        sample(grid, [](const Vec& x) { return 3.0 - 0.5 * sq_norm(x); }, "rhs");
    SolveResult sol = solve_elliptic(rhs, ref, grid, 1e-10, 50000);
    p.solution = std::move(sol.solution);
    p.solution.name = p.name;
    p.reference = ref;
    p.expected_rank = n;
    p.structure = StructureExpectation::pass;
    p.notes = "discrete solve against a concave right-hand side, convex in the ball";
    return p;
}

TestProblem rank_control_problem(int n, const GridPtr& grid) {
    TestProblem p;
    p.name = "rank_control";
    p.op = make_operator("poisson_rhs(rank_flat)", n);
    auto ref = [](const Vec& x) {
        double s = x[0] * x[0] * x[0] * x[0] / 12.0;
        for (size_t k = 1; k < x.size(); ++k) s += 0.5 * x[k] * x[k];
        return s;
    };
    p.solution = sample(grid, ref, p.name);
    p.reference = ref;
    p.rank_constant = false;
    p.expected_ranks = {n - 1, n};
    p.structure = StructureExpectation::fail;
    p.expect_harnack_inconsistent = true;
    p.notes = "quartic flat spot on one axis; Hessian rank drops on a hyperplane";
    return p;
}

} // namespace

std::vector<TestProblem> catalog(int dim, const GridPtr& grid) {
    require(static_cast<bool>(grid), ErrorKind::parameter, "catalog needs a grid");
    require(grid->dim() == dim, ErrorKind::parameter, "grid dimension does not match request");
    require(dim >= 2 && dim <= 4, ErrorKind::parameter, "catalog covers dimensions 2..4");
    std::vector<TestProblem> out;
    out.push_back(quad_full_problem(dim, grid));
    out.push_back(quad_rank1_problem(dim, grid));
    out.push_back(logdet_flat_problem(dim, grid));
    out.push_back(poisson_concave_problem(dim, grid));
    out.push_back(rank_control_problem(dim, grid));
    return out;
}

std::vector<std::string> catalog_names() {
    return {"quad_full", "quad_rank1", "logdet_flat", "poisson_concave", "rank_control"};
}

TestProblem make_radial_problem(int dim, const GridPtr& grid) {
    require(static_cast<bool>(grid), ErrorKind::parameter, "problem needs a grid");
    require(grid->dim() == dim, ErrorKind::parameter, "grid dimension does not match request");
    TestProblem p;
    p.name = "radial_smooth";
    p.op = make_operator("poisson_rhs(radial)", dim);
    auto ref = [](const Vec& x) {
        const double s = 0.5 * sq_norm(x);
        return s + 0.5 * s * s + s * s * s / 60.0;
    };
    p.solution = sample(grid, ref, p.name);
    p.reference = ref;
    p.expected_rank = dim;
    p.structure = StructureExpectation::untested;
    p.notes = "radial sixth-degree solution with genuinely curved eigenvalue fields";
    return p;
}

std::vector<std::string> problem_names() {
    auto names = catalog_names();
    names.push_back("radial_smooth");
    return names;
}

TestProblem lookup_problem(const std::string& name, int dim, const GridPtr& grid) {
    if (name == "radial_smooth") return make_radial_problem(dim, grid);
    const auto names = catalog_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) {
        for (auto& p : catalog(dim, grid))
            if (p.name == name) return p;
    }
    std::string msg = "unknown problem '" + name + "' (known:";
    for (const auto& m : problem_names()) msg += ' ' + m;
    fail(ErrorKind::config, msg + ")");
}

SolveResult solve_elliptic(const ScalarField& rhs,
                           const std::function<double(const Vec&)>& boundary,
                           const GridPtr& grid, double tol, int max_iter,
                           std::ostream* iteration_log_csv) {
    require(static_cast<bool>(grid), ErrorKind::parameter, "solver needs a grid");
    require(rhs.grid && rhs.grid->compatible(*grid), ErrorKind::parameter,
            "right-hand side lives on a different grid");
    require(static_cast<bool>(boundary), ErrorKind::parameter, "solver needs boundary data");
    require(tol > 0, ErrorKind::parameter, "tolerance must be positive");
    require(max_iter >= 1, ErrorKind::parameter, "iteration budget must be positive");

    const int n = grid->dim();
    const int N = grid->size();
    const double h = grid->spacing();
    const double invh2 = 1.0 / (h * h);

    // Unknowns: nodes whose whole axis stencil stays in the ball. Everything
    // else carries Dirichlet data.
    std::vector<int> slot(N, -1);
    std::vector<int> unknown;
    for (int pid = 0; pid < N; ++pid) {
        const int* idx = grid->index(pid);
        long long sq = 0;
        for (int k = 0; k < n; ++k) sq += static_cast<long long>(idx[k]) * idx[k];
        bool inner = true;
        for (int k = 0; k < n; ++k)
            if (sq + 2 * std::abs(static_cast<long long>(idx[k])) + 1 > grid->rsq_max())
                inner = false;
        if (inner) {
            slot[pid] = static_cast<int>(unknown.size());
            unknown.push_back(pid);
        }
    }

    SolveResult out;
    out.solution.grid = grid;
    out.solution.name = "solution";
    out.solution.values.resize(N);
    for (int pid = 0; pid < N; ++pid) {
        if (slot[pid] >= 0) continue;
        const double g = boundary(grid->coord(pid));
        require(std::isfinite(g), ErrorKind::sampling, "boundary datum is not finite");
        out.solution.values[static_cast<size_t>(pid)] = g;
    }

    const int m = static_cast<int>(unknown.size());
    if (m == 0) {
        if (iteration_log_csv) *iteration_log_csv << "iteration,residual\n";
        return out;
    }

    // Precompute neighbor slots (or Dirichlet pids as ~pid).
    std::vector<int> nb(static_cast<size_t>(m) * 2 * n);
    for (int k = 0; k < m; ++k) {
        std::vector<int> idx(grid->index(unknown[k]), grid->index(unknown[k]) + n);
        for (int a = 0; a < n; ++a)
            for (int s = 0; s < 2; ++s) {
                idx[a] += s == 0 ? 1 : -1;
                const int q = grid->find(idx.data());
                require(q >= 0, ErrorKind::index, "axis neighbor missing for an unknown");
                nb[(static_cast<size_t>(k) * n + a) * 2 + s] = slot[q] >= 0 ? slot[q] : ~q;
                idx[a] -= s == 0 ? 1 : -1;
            }
    }

    // L x = b with L the negated discrete Laplacian restricted to unknowns.
    Vec b(m);
    for (int k = 0; k < m; ++k) {
        double v = -rhs[unknown[k]];
        for (int a = 0; a < n; ++a)
            for (int s = 0; s < 2; ++s) {
                const int t = nb[(static_cast<size_t>(k) * n + a) * 2 + s];
                if (t < 0) v += out.solution.values[static_cast<size_t>(~t)] * invh2;
            }
        b[k] = v;
    }
    auto matvec = [&](const Vec& x) {
        Vec y(m);
        for (int k = 0; k < m; ++k) {
            double v = 2.0 * n * x[k];
            for (int a = 0; a < n; ++a)
                for (int s = 0; s < 2; ++s) {
                    const int t = nb[(static_cast<size_t>(k) * n + a) * 2 + s];
                    if (t >= 0) v -= x[t];
                }
            y[k] = v * invh2;
        }
        return y;
    };
    auto true_residual = [&](const Vec& x) {
        Vec r = matvec(x);
        for (int k = 0; k < m; ++k) r[k] = b[k] - r[k];
        return r;
    };

    Vec x(m, 0.0);
    Vec r = b;
    Vec p = r;
    double rs = dot(r, r);
    double res = norm_inf(r);
    out.history.push_back(res);

    while (res > tol && out.iterations < max_iter) {
        const Vec Ap = matvec(p);
        const double pAp = dot(p, Ap);
        require(pAp > 0, ErrorKind::numeric, "conjugate gradients met nonpositive curvature");
        const double alpha = rs / pAp;
        for (int k = 0; k < m; ++k) x[k] += alpha * p[k];
        for (int k = 0; k < m; ++k) r[k] -= alpha * Ap[k];
        ++out.iterations;
        if (out.iterations % 64 == 0) r = true_residual(x); // shed recurrence drift
        const double rs2 = dot(r, r);
        res = norm_inf(r);
        out.history.push_back(res);
        const double beta = rs2 / rs;
        rs = rs2;
        for (int k = 0; k < m; ++k) p[k] = r[k] + beta * p[k];
        if (res <= tol) {
            // Accept only a true residual below tolerance.
            r = true_residual(x);
            rs = dot(r, r);
            res = norm_inf(r);
            out.history.back() = res;
            if (res > tol) p = r; // restart
        }
    }
    out.residual = res;

    if (iteration_log_csv) {
        char buf[40];
        *iteration_log_csv << "iteration,residual\n";
        for (size_t i = 0; i < out.history.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", out.history[i]);
            *iteration_log_csv << i << ',' << buf << '\n';
        }
    }
    require(res <= tol, ErrorKind::convergence,
            "residual " + std::to_string(res) + " above tolerance after " +
                std::to_string(out.iterations) + " iterations");

    for (int k = 0; k < m; ++k) out.solution.values[static_cast<size_t>(unknown[k])] = x[k];
    return out;
}

ValidationReport validate(const TestProblem& problem, std::uint64_t seed,
                          int structure_samples) {
    require(static_cast<bool>(problem.op), ErrorKind::parameter, "problem has no operator");
    const ScalarField& u = problem.solution;
    require(static_cast<bool>(u.grid), ErrorKind::parameter, "problem has no solution field");
    const double h = u.grid->spacing();

    ValidationReport rep;

    const EigenField e = hessian_eigenfield(u, true);
    double lmin = std::numeric_limits<double>::infinity();
    double lmax = -std::numeric_limits<double>::infinity();
    for (int pid = 0; pid < e.grid->size(); ++pid) {
        lmin = std::min(lmin, e.lambda(pid, 0));
        lmax = std::max(lmax, e.lambda(pid, e.dim - 1));
    }
    rep.convexity.value = lmin;
    rep.convexity.bound = -1e-8 * std::max(1.0, lmax);
    rep.convexity.pass = rep.convexity.value >= rep.convexity.bound;

    rep.residual.value = pde_residual(*problem.op, u);
    rep.residual.bound = 10.0 * problem.residual_scale * h * h;
    rep.residual.pass = rep.residual.value <= rep.residual.bound;

    try {
        rep.ellipticity = ellipticity_bounds(*problem.op, u);
        rep.ellipticity_ok = true;
    } catch (const Error& err) {
        if (err.kind() != ErrorKind::ellipticity) throw;
        rep.ellipticity_ok = false;
        rep.ellipticity_message = err.what();
    }

    if (problem.structure != StructureExpectation::untested) {
        StructureSpec spec;
        spec.seed = seed;
        spec.samples = structure_samples;
        double ulo = *std::min_element(u.values.begin(), u.values.end());
        double uhi = *std::max_element(u.values.begin(), u.values.end());
        if (uhi - ulo < 1e-12) {
            ulo -= 0.5;
            uhi += 0.5;
        }
        spec.u_lo = ulo;
        spec.u_hi = uhi;
        spec.x_radius = u.grid->radius();
        double pmax = 1e-6;
        for (int pid : u.grid->interior_ids(1))
            pmax = std::max(pmax, norm_inf(fd_gradient(u, pid)));
        spec.p_scale = pmax;
        rep.structure = check_structure(*problem.op, spec);
        const bool expected = problem.structure == StructureExpectation::pass;
        rep.structure_matches = rep.structure->pass == expected;
    }

    rep.pass = rep.convexity.pass && rep.residual.pass && rep.ellipticity_ok &&
               rep.structure_matches;
    return rep;
}

} // namespace hesslab
