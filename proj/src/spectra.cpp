#include "hesslab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace hesslab {

namespace {

constexpr int kMaxSweeps = 50;

} // namespace

EigenSystem eigensystem(const SymMat& A) {
    const int n = A.dim();
    std::vector<double> a(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<size_t>(i) * n + j] = A(i, j);
    Matrix V = Matrix::identity(n);

    const double scale = std::max(1.0, A.max_abs());
    const double stop = 1e-15 * scale;

    // Cyclic Jacobi sweeps; fixed pair order keeps the result deterministic.
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p * n + q]));
        if (off <= stop) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) <= 1e-300) continue;
                const double tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
    require(sweep < kMaxSweeps, ErrorKind::numeric,
            "Jacobi iteration did not converge in " + std::to_string(kMaxSweeps) + " sweeps");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a[i * n + i] < a[j * n + j]; });

    EigenSystem sys;
    sys.eigenvalues.resize(n);
    sys.vectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        sys.eigenvalues[k] = a[order[k] * n + order[k]];
        for (int r = 0; r < n; ++r) sys.vectors(r, k) = V(r, order[k]);
    }
    return sys;
}

EigenSystem eigensystem(const Matrix& A) { return eigensystem(SymMat::from_matrix(A)); }

double sigma_k(const SymMat& A, int k) {
    require(k >= 1 && k <= A.dim(), ErrorKind::index,
            "sigma_k index k = " + std::to_string(k) + " outside [1, dim]");
    const auto sys = eigensystem(A);
    double s = 0;
    for (int i = 0; i < k; ++i) s += sys.eigenvalues[i];
    return s;
}

double q_weight(const Vec& lam, int k) {
    const int n = static_cast<int>(lam.size());
    require(k >= 1 && k <= n, ErrorKind::index,
            "q_weight index k = " + std::to_string(k) + " outside [1, dim]");
    double sum = 0; // sum of partial sums sigma_1..sigma_k
    double partial = 0;
    for (int m = 0; m < k; ++m) {
        partial += lam[m];
        sum += partial;
    }
    double weighted = 0; // lambda_k + 2 lambda_{k-1} + ... + k lambda_1
    for (int i = 0; i < k; ++i) weighted += static_cast<double>(k - i) * lam[i];
    require(std::abs(sum - weighted) <= 1e-12 * std::max(1.0, std::abs(sum)),
            ErrorKind::numeric, "Q_k dual formulas disagree");
    return sum;
}

double q_weight(const SymMat& A, int k) { return q_weight(eigensystem(A).eigenvalues, k); }

double r_quantity(const Vec& lam, int ell, double eps) {
    const int n = static_cast<int>(lam.size());
    require(eps > 0, ErrorKind::parameter, "eps must be positive");
    require(ell >= 1 && ell <= n, ErrorKind::index,
            "ell = " + std::to_string(ell) + " outside [1, dim]");
    double r = 0;
    for (int k = 1; k <= ell; ++k) {
        const double qk = q_weight(lam, k);
        require(qk >= -1e-8, ErrorKind::convexity,
                "Q_" + std::to_string(k) + " = " + std::to_string(qk) +
                    " negative beyond tolerance");
        r += std::sqrt(std::max(qk, 0.0) + eps);
    }
    return r;
}

double r_quantity(const SymMat& A, int ell, double eps) {
    return r_quantity(eigensystem(A).eigenvalues, ell, eps);
}

int BlockStructure::block_of(int m0) const {
    for (int b = 0; b < block_count(); ++b)
        if (m0 <= breakpoints[b]) return b;
    fail(ErrorKind::index, "eigen index outside spectrum");
}

int BlockStructure::rho(int m0) const { return breakpoints[block_of(m0)]; }

int BlockStructure::first_of_block(int b) const {
    require(b >= 0 && b < block_count(), ErrorKind::index, "block index out of range");
    return b == 0 ? 0 : breakpoints[b - 1] + 1;
}

BlockStructure block_structure(const EigenSystem& sys, double gap_tol) {
    require(gap_tol >= 0, ErrorKind::parameter, "gap_tol must be nonnegative");
    const int n = sys.dim();
    require(n >= 1, ErrorKind::config, "empty spectrum");
    BlockStructure bs;
    bs.gap_tol = gap_tol;
    for (int i = 0; i + 1 < n; ++i)
        if (sys.eigenvalues[i + 1] - sys.eigenvalues[i] > gap_tol) bs.breakpoints.push_back(i);
    bs.breakpoints.push_back(n - 1);
    return bs;
}

double EigenField::max_eigenvalue() const {
    double s = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < grid->size(); ++p) s = std::max(s, lambda(p, dim - 1));
    return s;
}

EigenField hessian_eigenfield(const ScalarField& u, bool convex_hint) {
    const Grid& g = *u.grid;
    EigenField e;
    e.grid = g.shrink(1);
    e.dim = g.dim();
    e.source = u.name;
    e.convex = convex_hint;
    e.source_spacing = g.spacing();
    const int n = e.dim;
    e.eigenvalues.resize(static_cast<size_t>(e.grid->size()) * n);
    e.vectors.resize(static_cast<size_t>(e.grid->size()) * n * n);
    for (int p = 0; p < e.grid->size(); ++p) {
        const int src = g.find(e.grid->index(p));
        require(src >= 0, ErrorKind::index, "shrunken grid point missing from source grid");
        const auto sys = eigensystem(fd_hessian(u, src));
        for (int k = 0; k < n; ++k) {
            e.eigenvalues[static_cast<size_t>(p) * n + k] = sys.eigenvalues[k];
            for (int r = 0; r < n; ++r)
                e.vectors[(static_cast<size_t>(p) * n + k) * n + r] = sys.vectors(r, k);
        }
    }
    return e;
}

namespace {

ScalarField derived_field(const EigenField& e, const std::string& name,
                          const std::function<double(const double*)>& fn) {
    ScalarField f;
    f.grid = e.grid;
    f.name = name;
    f.values.resize(e.grid->size());
    for (int p = 0; p < e.grid->size(); ++p) f.values[static_cast<size_t>(p)] = fn(e.lambda(p));
    return f;
}

} // namespace

ScalarField lambda_field(const EigenField& e, int k) {
    require(k >= 1 && k <= e.dim, ErrorKind::index, "eigenvalue index outside [1, dim]");
    return derived_field(e, "lambda_" + std::to_string(k),
                         [&, k](const double* lam) { return lam[k - 1]; });
}

ScalarField sigma_field(const EigenField& e, int k) {
    require(k >= 1 && k <= e.dim, ErrorKind::index, "sigma index outside [1, dim]");
    return derived_field(e, "sigma_" + std::to_string(k), [&, k](const double* lam) {
        double s = 0;
        for (int i = 0; i < k; ++i) s += lam[i];
        return s;
    });
}

ScalarField q_field(const EigenField& e, int k) {
    require(k >= 1 && k <= e.dim, ErrorKind::index, "Q index outside [1, dim]");
    return derived_field(e, "q_" + std::to_string(k), [&, k](const double* lam) {
        double sum = 0, partial = 0;
        for (int m = 0; m < k; ++m) {
            partial += lam[m];
            sum += partial;
        }
        return sum;
    });
}

ScalarField r_field(const EigenField& e, int ell, double eps) {
    require(ell >= 1 && ell <= e.dim, ErrorKind::index, "ell outside [1, dim]");
    require(eps > 0, ErrorKind::parameter, "eps must be positive");
    return derived_field(e, "r_" + std::to_string(ell), [&, ell, eps](const double* lam) {
        return r_quantity(Vec(lam, lam + e.dim), ell, eps);
    });
}

namespace {

// Index-at-a-time orthogonal change of frame for flattened tensors.
std::vector<double> rotate_tensor(const std::vector<double>& T, const Matrix& V, int dim,
                                  int rank) {
    std::vector<double> cur = T, next(T.size());
    size_t total = T.size();
    for (int r = 0; r < rank; ++r) {
        // Rotate the last index, then cycle it to the front.
        const size_t lead = total / dim;
        for (size_t base = 0; base < lead; ++base) {
            for (int j = 0; j < dim; ++j) {
                double s = 0;
                for (int p = 0; p < dim; ++p) s += cur[base * dim + p] * V(p, j);
                next[static_cast<size_t>(j) * lead + base] = s;
            }
        }
        std::swap(cur, next);
    }
    return cur; // rank cycles restore the original index order
}

struct PointSpectrum {
    EigenSystem sys;
    BlockStructure blocks;
};

PointSpectrum analyzed_spectrum(const ScalarField& u, int pid, double gap_tol) {
    PointSpectrum ps;
    ps.sys = eigensystem(fd_hessian(u, pid));
    ps.blocks = block_structure(ps.sys, gap_tol);
    // Require unambiguous splits: every cross-block gap clear of the
    // [gap_tol, 10 gap_tol] ambiguity band.
    for (int b = 0; b + 1 < ps.blocks.block_count(); ++b) {
        const int top = ps.blocks.breakpoints[b];
        const double gap = ps.sys.eigenvalues[top + 1] - ps.sys.eigenvalues[top];
        require(gap >= 10.0 * gap_tol, ErrorKind::degenerate_gap,
                "eigenvalue gap " + std::to_string(gap) + " inside the ambiguity band [" +
                    std::to_string(gap_tol) + ", " + std::to_string(10.0 * gap_tol) + ")");
    }
    return ps;
}

Vec sorted_eigenvalues_at(const ScalarField& u, const int* multi) {
    const int pid = u.grid->find(multi);
    require(pid >= 0, ErrorKind::margin, "eigenvalue stencil point missing");
    return eigensystem(fd_hessian(u, pid)).eigenvalues;
}

} // namespace

double first_variation_residual(const ScalarField& u, const std::vector<int>& point,
                                double gap_tol) {
    const Grid& g = *u.grid;
    const int n = g.dim();
    const int pid = g.find(point);
    require(pid >= 0, ErrorKind::index, "point not in grid");
    require(g.admissible(pid, 2), ErrorKind::margin,
            "third-derivative stencil leaves the grid");
    require(gap_tol > 0, ErrorKind::parameter, "gap_tol must be positive");

    const auto ps = analyzed_spectrum(u, pid, gap_tol);
    const Matrix& V = ps.sys.vectors;
    const auto T = rotate_tensor(fd_third_tensor(u, pid), V, n, 3);

    // Central difference of each sorted eigenvalue field, one axis at a time.
    Matrix grad(n, n); // grad(i, a) = d lambda_i / d x_a
    std::vector<int> probe(point);
    for (int a = 0; a < n; ++a) {
        probe[a] += 1;
        const Vec up = sorted_eigenvalues_at(u, probe.data());
        probe[a] -= 2;
        const Vec dn = sorted_eigenvalues_at(u, probe.data());
        probe[a] += 1;
        for (int i = 0; i < n; ++i) grad(i, a) = (up[i] - dn[i]) / (2.0 * g.spacing());
    }

    double residual = 0;
    for (int b = 0; b < ps.blocks.block_count(); ++b) {
        const int lo = ps.blocks.first_of_block(b);
        const int hi = ps.blocks.breakpoints[b];
        // Gradient of the block's eigenvalue field (block mean, which stays
        // smooth even when the sorted members wobble), rotated into the frame.
        Vec gtilde(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a) {
                double ga = 0;
                for (int k = lo; k <= hi; ++k) ga += grad(k, a);
                gtilde[i] += V(a, i) * ga / (hi - lo + 1);
            }
        for (int k = lo; k <= hi; ++k)
            for (int l = lo; l <= hi; ++l)
                for (int i = 0; i < n; ++i) {
                    const double expected = (k == l) ? gtilde[i] : 0.0;
                    const double got = T[(static_cast<size_t>(k) * n + l) * n + i];
                    residual = std::max(residual, std::abs(got - expected));
                }
    }
    return residual;
}

double second_variation_defect(const ScalarField& u, const std::vector<int>& point, int m,
                               double gap_tol) {
    const Grid& g = *u.grid;
    const int n = g.dim();
    const int pid = g.find(point);
    require(pid >= 0, ErrorKind::index, "point not in grid");
    require(m >= 1 && m <= n, ErrorKind::index, "m outside [1, dim]");
    require(g.admissible(pid, 2), ErrorKind::margin,
            "fourth-derivative stencil leaves the grid");
    require(gap_tol > 0, ErrorKind::parameter, "gap_tol must be positive");

    const auto ps = analyzed_spectrum(u, pid, gap_tol);
    const Matrix& V = ps.sys.vectors;
    const Vec& lam = ps.sys.eigenvalues;
    const int rho = ps.blocks.rho(m - 1); // 0-based top of m's block
    const double h = g.spacing();

    // LHS: finite-difference Hessian of the sum of the m smallest eigenvalues.
    auto sig = [&](const std::vector<int>& multi) {
        const Vec ev = sorted_eigenvalues_at(u, multi.data());
        double s = 0;
        for (int i = 0; i < m; ++i) s += ev[i];
        return s;
    };
    SymMat lhs(n);
    {
        std::vector<int> probe(point);
        const double center = sig(probe);
        for (int a = 0; a < n; ++a) {
            probe[a] += 1;
            const double up = sig(probe);
            probe[a] -= 2;
            const double dn = sig(probe);
            probe[a] += 1;
            lhs.set(a, a, (up - 2.0 * center + dn) / (h * h));
        }
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                double s = 0;
                for (int sa : {+1, -1})
                    for (int sb : {+1, -1}) {
                        probe[a] += sa;
                        probe[b] += sb;
                        s += sa * sb * sig(probe);
                        probe[a] -= sa;
                        probe[b] -= sb;
                    }
                lhs.set(a, b, s / (4.0 * h * h));
            }
    }
    // Rotate LHS into the eigenframe.
    SymMat lhs_rot(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) s += V(p, i) * lhs(p, q) * V(q, j);
            lhs_rot.set(i, j, s);
        }

    const auto T3 = rotate_tensor(fd_third_tensor(u, pid), V, n, 3);
    const auto T4 = rotate_tensor(fd_fourth_tensor(u, pid), V, n, 4);

    SymMat rhs(n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            double s = 0;
            for (int al = 0; al < m; ++al)
                s += T4[((static_cast<size_t>(al) * n + al) * n + a) * n + b];
            for (int al = 0; al < m; ++al)
                for (int q = rho + 1; q < n; ++q) {
                    const double gap = lam[al] - lam[q];
                    require(std::abs(gap) > 1e-12 * std::max(1.0, std::abs(lam[q])),
                            ErrorKind::singular_gap,
                            "vanishing spectral gap in the second-variation sum");
                    const double tqa = T3[(static_cast<size_t>(q) * n + al) * n + a];
                    const double tqb = T3[(static_cast<size_t>(q) * n + al) * n + b];
                    s += 2.0 * tqa * tqb / gap;
                }
            rhs.set(a, b, s);
        }

    return eigensystem(rhs - lhs_rot).eigenvalues[0];
}

double midpoint_defect(const ScalarField& f, const std::vector<int>& x,
                       const std::vector<int>& y) {
    const Grid& g = *f.grid;
    const int n = g.dim();
    require(static_cast<int>(x.size()) == n && static_cast<int>(y.size()) == n,
            ErrorKind::index, "multi-index dimension mismatch");
    const int px = g.find(x), py = g.find(y);
    require(px >= 0 && py >= 0, ErrorKind::index, "endpoint not in grid");
    std::vector<int> mid(n);
    for (int k = 0; k < n; ++k) {
        require((x[k] + y[k]) % 2 == 0, ErrorKind::alignment,
                "midpoint of the pair is not a lattice point (axis " + std::to_string(k) + ")");
        mid[k] = (x[k] + y[k]) / 2;
    }
    const int pm = g.find(mid);
    require(pm >= 0, ErrorKind::index, "midpoint missing from grid");
    return 0.5 * (f[px] + f[py]) - f[pm];
}

SemiconcavityReport compose_semiconcave_check(const ScalarField& f, const ScalarMap& h,
                                              int pairs, std::uint64_t seed) {
    require(pairs > 0, ErrorKind::parameter, "pair count must be positive");
    require(static_cast<bool>(h.fn), ErrorKind::parameter, "scalar map has no function");
    const Grid& g = *f.grid;
    const int n = g.dim();

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, g.size() - 1);

    SemiconcavityReport rep;
    rep.lipschitz = h.lipschitz;
    double scale = 1.0;
    const long long max_attempts = 200LL * pairs + 1000;
    long long attempts = 0;
    while (rep.pairs < pairs) {
        require(attempts++ < max_attempts, ErrorKind::sample_quality,
                "could not sample enough aligned point pairs");
        const int pa = pick(rng), pb = pick(rng);
        if (pa == pb) continue;
        const int* ia = g.index(pa);
        const int* ib = g.index(pb);
        bool aligned = true;
        for (int k = 0; k < n; ++k)
            if ((ia[k] + ib[k]) % 2 != 0) aligned = false;
        if (!aligned) continue;
        std::vector<int> mid(n);
        for (int k = 0; k < n; ++k) mid[k] = (ia[k] + ib[k]) / 2;
        const int pm = g.find(mid.data());
        require(pm >= 0, ErrorKind::index, "midpoint missing from grid");

        const double t1 = f[pa], t2 = f[pb], tm = f[pm];
        scale = std::max({scale, std::abs(t1), std::abs(t2)});
        const double decl_tol = 1e-12 * std::max(1.0, scale * std::max(1.0, h.lipschitz));
        const double h1 = h.fn(t1), h2 = h.fn(t2), hm = h.fn(tm);
        if (h.increasing)
            require((t1 - t2) * (h1 - h2) >= -decl_tol, ErrorKind::declaration,
                    "declared increasing map decreases on sampled values");
        if (h.concave)
            require(h.fn(0.5 * (t1 + t2)) >= 0.5 * (h1 + h2) - decl_tol, ErrorKind::declaration,
                    "declared concave map violates midpoint concavity on sampled values");
        require(std::abs(h1 - h2) <= h.lipschitz * std::abs(t1 - t2) + decl_tol,
                ErrorKind::declaration,
                "declared Lipschitz constant violated on sampled values");

        double dist_sq = 0;
        for (int k = 0; k < n; ++k) {
            const double d = (ia[k] - ib[k]) * g.spacing();
            dist_sq += d * d;
        }
        const double df = (0.5 * (t1 + t2) - tm) / dist_sq;
        const double dh = (0.5 * (h1 + h2) - hm) / dist_sq;
        if (rep.pairs == 0) {
            rep.constant_f = df;
            rep.constant_hf = dh;
        } else {
            rep.constant_f = std::max(rep.constant_f, df);
            rep.constant_hf = std::max(rep.constant_hf, dh);
        }
        ++rep.pairs;
    }
    rep.bound_holds = rep.constant_hf <=
                      h.lipschitz * std::max(rep.constant_f, 0.0) + 1e-10 * std::max(1.0, scale);
    return rep;
}

void write_eigen_csv(const EigenField& e, std::ostream& os) {
    const Grid& g = *e.grid;
    char buf[40];
    for (int k = 0; k < g.dim(); ++k) os << "x_" << (k + 1) << ",";
    for (int k = 0; k < e.dim; ++k) {
        os << "lambda_" << (k + 1);
        os << (k + 1 < e.dim ? "," : "\n");
    }
    for (int p = 0; p < g.size(); ++p) {
        const Vec x = g.coord(p);
        for (int k = 0; k < g.dim(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", x[k]);
            os << buf << ",";
        }
        for (int k = 0; k < e.dim; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", e.lambda(p, k));
            os << buf << (k + 1 < e.dim ? "," : "\n");
        }
    }
}

} // namespace hesslab
