#include "hesslab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hesslab {

namespace {

std::string point_text(const Vec& x) {
    std::ostringstream os;
    os << '(';
    for (size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << ')';
    return os.str();
}

} // namespace

RankMap rank_map(const EigenField& e, double tol) {
    require(tol >= 0, ErrorKind::parameter, "rank tolerance must be nonnegative");
    RankMap m;
    m.grid = e.grid;
    m.tol = tol;
    m.ranks.resize(e.grid->size());
    for (int pid = 0; pid < e.grid->size(); ++pid) {
        const double* lam = e.lambda(pid);
        const double thr = tol * std::max(1.0, lam[e.dim - 1]);
        int r = 0;
        for (int k = e.dim - 1; k >= 0 && lam[k] > thr; --k) ++r;
        m.ranks[static_cast<size_t>(pid)] = r;
        ++m.counts[r];
    }
    m.constant = m.counts.size() == 1;
    m.rank = m.constant ? m.counts.begin()->first : 0;
    return m;
}

const char* to_string(HarnackStatus s) {
    switch (s) {
    case HarnackStatus::finite: return "finite";
    case HarnackStatus::degenerate: return "degenerate";
    case HarnackStatus::inconsistent: return "inconsistent";
    }
    return "?";
}

HarnackVerdict harnack_verdict(const EigenField& e, int ell, double q, const Region& region,
                               double zero_tol) {
    require(ell >= 1 && ell <= e.dim, ErrorKind::index, "ell outside [1, dim]");
    require(q > 0, ErrorKind::parameter, "exponent q must be positive");
    require(zero_tol >= 0, ErrorKind::parameter, "zero tolerance must be nonnegative");

    HarnackVerdict v;
    v.ell = ell;
    v.q = q;
    v.zero_tol = zero_tol;

    ScalarField lam = lambda_field(e, ell);
    double inf = std::numeric_limits<double>::infinity();
    int inside = 0;
    for (int pid = 0; pid < lam.size(); ++pid) {
        if (!region.contains(lam.grid->coord(pid))) continue;
        ++inside;
        double& val = lam.values[static_cast<size_t>(pid)];
        require(val >= -zero_tol, ErrorKind::convexity,
                "eigenvalue " + std::to_string(val) + " below -zero_tol at " +
                    point_text(lam.grid->coord(pid)));
        val = std::max(val, 0.0);
        inf = std::min(inf, val);
    }
    require(inside > 0, ErrorKind::region, "region contains no grid points");
    v.infimum = inf;
    v.lq_average = integrate_lq(lam, region, q);

    if (v.infimum <= zero_tol) {
        v.status = v.lq_average <= zero_tol ? HarnackStatus::degenerate
                                            : HarnackStatus::inconsistent;
        v.ratio = 0;
    } else {
        v.status = HarnackStatus::finite;
        v.ratio = v.lq_average / v.infimum;
    }
    return v;
}

namespace {

// Per-point gap fingerprints: pattern bit i says the gap above eigenvalue i
// exceeds gap_tol.
struct GapScan {
    std::vector<std::uint32_t> pattern;
};

GapScan scan_gaps(const EigenField& e, double gap_tol) {
    GapScan s;
    s.pattern.resize(e.grid->size(), 0);
    for (int pid = 0; pid < e.grid->size(); ++pid) {
        const double* lam = e.lambda(pid);
        std::uint32_t pat = 0;
        for (int i = 0; i + 1 < e.dim; ++i)
            if (lam[i + 1] - lam[i] > gap_tol) pat |= 1u << i;
        s.pattern[pid] = pat;
    }
    return s;
}

// True when the unit-cube stencil around pid sees an eigenvalue crossing: the
// block pattern changes between stencil points, so some sorted-eigenvalue
// field has a kink inside the differentiation window. pid must be cube-1
// admissible. (Consistently merged near-degenerate blocks are fine: the Q
// fields built from smallest-eigenvalue sums only have min-type kinks, which
// bias finite differences of their supremum downward, never up.)
bool stencil_crossing(const EigenField& e, const GapScan& s, int pid) {
    const Grid& g = *e.grid;
    const int n = g.dim();
    const std::uint32_t pat = s.pattern[pid];
    std::vector<int> probe(n);
    std::vector<int> off(n, -1);
    for (;;) {
        for (int k = 0; k < n; ++k) probe[k] = g.index(pid)[k] + off[k];
        const int q = g.find(probe.data());
        require(q >= 0, ErrorKind::margin, "crossing scan left the grid");
        if (s.pattern[q] != pat) return true;
        int k = 0;
        while (k < n && off[k] == 1) off[k++] = -1;
        if (k == n) return false;
        ++off[k];
    }
}

} // namespace

SubsolutionReport r_subsolution_constant(const OperatorF& F, const ScalarField& u, int ell,
                                         double eps, double gap_tol) {
    require(eps > 0, ErrorKind::parameter, "eps must be positive");
    require(gap_tol >= 0, ErrorKind::parameter, "gap_tol must be nonnegative");
    const EigenField e = hessian_eigenfield(u, true);
    require(ell >= 1 && ell <= e.dim, ErrorKind::index, "ell outside [1, dim]");

    SubsolutionReport rep;
    rep.ell = ell;
    rep.eps = eps;

    const ScalarField R = r_field(e, ell, eps);
    const GapScan scan = scan_gaps(e, gap_tol);
    const auto ids = e.grid->interior_ids(1);
    require(!ids.empty(), ErrorKind::region, "no interior points for the subsolution sweep");

    for (int pid : ids) {
        if (stencil_crossing(e, scan, pid)) {
            ++rep.excluded;
            continue;
        }
        const SymMat Rab = fd_hessian(R, pid);
        const int pid_u = u.grid->find(e.grid->index(pid));
        require(pid_u >= 0, ErrorKind::index, "interior point missing from source grid");
        const SymMat M = F.d_A(state_at(F, u, pid_u));
        const double val = M.inner(Rab) / R[pid];
        if (rep.evaluated == 0 || val > rep.c_star) rep.c_star = val;
        ++rep.evaluated;
    }
    const int total = rep.evaluated + rep.excluded;
    require(rep.excluded * 5 <= total, ErrorKind::sample_quality,
            "crossing stencils excluded " + std::to_string(rep.excluded) + " of " +
                std::to_string(total) + " points");
    require(rep.evaluated > 0, ErrorKind::region, "every candidate point was excluded");
    return rep;
}

ChainReport gradient_chain_bound(const ScalarField& u, int ell, double eps, double gap_tol) {
    require(eps > 0, ErrorKind::parameter, "eps must be positive");
    require(gap_tol >= 0, ErrorKind::parameter, "gap_tol must be nonnegative");
    const EigenField e = hessian_eigenfield(u, true);
    require(ell >= 1 && ell <= e.dim, ErrorKind::index, "ell outside [1, dim]");

    ChainReport rep;
    rep.ell = ell;
    rep.eps = eps;

    std::vector<ScalarField> lam, qf;
    for (int k = 1; k <= ell; ++k) {
        lam.push_back(lambda_field(e, k));
        qf.push_back(q_field(e, k));
    }
    const GapScan scan = scan_gaps(e, gap_tol);
    const auto ids = e.grid->interior_ids(1);
    require(!ids.empty(), ErrorKind::region, "no interior points for the chain sweep");

    for (int pid : ids) {
        if (stencil_crossing(e, scan, pid)) {
            ++rep.excluded;
            continue;
        }
        Vec dnorm(ell);
        for (int i = 0; i < ell; ++i) dnorm[i] = norm2(fd_gradient(lam[i], pid));
        double lhs = 0, rhs = 0;
        for (int k = 0; k < ell; ++k) {
            const double qk = qf[k][pid];
            require(qk + eps > 0, ErrorKind::convexity,
                    "Q_" + std::to_string(k + 1) + " + eps not positive");
            const double w = 1.0 / std::sqrt(qk + eps);
            double sum = 0;
            for (int i = 0; i <= k; ++i) sum += dnorm[i];
            lhs += w * sum;
            rhs += w * norm2(fd_gradient(qf[k], pid));
        }
        if (lhs <= 1e-14 && rhs <= 1e-14) {
            ++rep.skipped_trivial;
            continue;
        }
        require(rhs > 1e-14, ErrorKind::inconsistency,
                "chain denominator vanished while the numerator did not");
        const double ratio = lhs / rhs;
        if (rep.evaluated == 0 || ratio > rep.constant) rep.constant = ratio;
        ++rep.evaluated;
    }
    return rep;
}

WeakHarnackReport weak_harnack_check(const std::function<SymMat(const Vec&)>& a,
                                     const std::function<Vec(const Vec&)>& b,
                                     const std::function<double(const Vec&)>& c,
                                     const ScalarField& v, const ScalarField& f,
                                     const Region& region, double q, double subsol_tol) {
    require(static_cast<bool>(a) && static_cast<bool>(b) && static_cast<bool>(c),
            ErrorKind::parameter, "coefficient functions must all be set");
    require(v.grid && f.grid && f.grid->compatible(*v.grid), ErrorKind::parameter,
            "v and f live on different grids");
    require(q > 0, ErrorKind::parameter, "exponent q must be positive");
    const Grid& g = *v.grid;
    const int n = g.dim();
    const double h = g.spacing();

    WeakHarnackReport rep;
    rep.q = q;

    const auto ids = g.interior_ids(1);
    require(!ids.empty(), ErrorKind::region, "no interior points at margin 1");

    // Ellipticity of the coefficient field.
    for (int pid : ids) {
        const Vec x = g.coord(pid);
        const auto sys = eigensystem(a(x));
        const double lo = sys.eigenvalues.front(), hi = sys.eigenvalues.back();
        require(lo > 0, ErrorKind::ellipticity,
                "coefficient matrix not positive definite at " + point_text(x));
        rep.lambda = std::max(rep.lambda, std::max(hi, 1.0 / lo));
    }

    double vmax = 1.0;
    for (double val : v.values) vmax = std::max(vmax, std::abs(val));
    const double tol = subsol_tol >= 0 ? subsol_tol : 10.0 * (1.0 + rep.lambda) * h * h * vmax;

    int ok = 0;
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    for (int pid : ids) {
        const Vec x = g.coord(pid);
        const SymMat A = a(x);
        const SymMat H = fd_hessian(v, pid);
        const Vec grad = fd_gradient(v, pid);
        double lv = A.inner(H) + dot(b(x), grad) + c(x) * v[pid];
        const double violation = lv - f[pid];
        if (violation <= tol) ++ok;
        if (violation > rep.worst_violation) {
            rep.worst_violation = violation;
            rep.worst_point = x;
        }
    }
    rep.subsolution_fraction = static_cast<double>(ok) / static_cast<double>(ids.size());
    require(rep.subsolution_fraction >= 0.99, ErrorKind::subsolution,
            "inequality precheck failed at " + std::to_string(ids.size() - ok) + " of " +
                std::to_string(ids.size()) + " points; worst " +
                std::to_string(rep.worst_violation) + " at " + point_text(rep.worst_point));

    // Values over the region; v must be (numerically) nonnegative there.
    ScalarField vc = v;
    double vmin = std::numeric_limits<double>::infinity();
    int inside = 0;
    for (int pid = 0; pid < g.size(); ++pid) {
        if (!region.contains(g.coord(pid))) continue;
        ++inside;
        double& val = vc.values[static_cast<size_t>(pid)];
        require(val >= -1e-12 * vmax, ErrorKind::domain,
                "negative value " + std::to_string(val) + " in the comparison region");
        val = std::max(val, 0.0);
        vmin = std::min(vmin, val);
    }
    require(inside > 0, ErrorKind::region, "region contains no grid points");
    rep.infimum = vmin;
    rep.lq_average = integrate_lq(vc, region, q);

    ScalarField absf = f;
    for (double& val : absf.values) val = std::abs(val);
    rep.f_norm = integrate_lq(absf, region, n);

    const double denom = rep.infimum + rep.f_norm;
    rep.c_emp = denom > 0 ? rep.lq_average / denom : 0.0;

    for (int factor : {2, 4}) {
        const ScalarField vm = mollify(vc, factor * h);
        double inf_m = std::numeric_limits<double>::infinity();
        for (int pid = 0; pid < vm.grid->size(); ++pid)
            if (region.contains(vm.grid->coord(pid)))
                inf_m = std::min(inf_m, vm[pid]);
        require(std::isfinite(inf_m), ErrorKind::region,
                "region contains no points of the mollified grid");
        const double lq_m = integrate_lq(vm, region, q);
        const double denom_m = std::max(inf_m, 0.0) + rep.f_norm;
        rep.mollified_c_emp.push_back(denom_m > 0 ? lq_m / denom_m : 0.0);
    }
    rep.mollification_stable = true;
    for (double cm : rep.mollified_c_emp)
        if (std::abs(cm - rep.c_emp) > 0.1 * rep.c_emp + 1e-12) rep.mollification_stable = false;
    return rep;
}

double default_zero_tol(const EigenField& e) {
    const double h = e.source_spacing;
    return std::max(1e-8, h * h) * std::max(1.0, e.max_eigenvalue());
}

double default_gap_tol(const EigenField& e) {
    const double h = e.source_spacing;
    return std::max(1e-6, h * h) * std::max(1.0, e.max_eigenvalue());
}

} // namespace hesslab
