#pragma once

#include <map>

#include "hesslab/bench.hpp"
#include "hesslab/operators.hpp"
#include "hesslab/spectra.hpp"

namespace hesslab {

struct RankMap {
    GridPtr grid;
    std::vector<int> ranks;          // per point
    bool constant = false;
    int rank = 0;                    // when constant
    std::map<int, int> counts;       // rank -> point count
    double tol = 0;
};

// rank(point) = #{eigenvalues > tol * max(1, lambda_max(point))}.
RankMap rank_map(const EigenField& e, double tol);

enum class HarnackStatus { finite, degenerate, inconsistent };
const char* to_string(HarnackStatus s);

struct HarnackVerdict {
    HarnackStatus status = HarnackStatus::finite;
    int ell = 0;
    double q = 0;
    double lq_average = 0;
    double infimum = 0;
    double ratio = 0;    // lq_average / infimum when finite
    double zero_tol = 0;
};

// Normalized L^q average of lambda_ell over the region against its infimum on
// the same points. degenerate iff both sides <= zero_tol; inconsistent iff
// the infimum degenerates but the average does not.
HarnackVerdict harnack_verdict(const EigenField& e, int ell, double q, const Region& region,
                               double zero_tol);

struct SubsolutionReport {
    double c_star = 0;       // max over admissible points of F^{ab} R_ab / R
    int evaluated = 0;
    int excluded = 0;        // eigenvalue crossing inside the stencil
    int ell = 0;
    double eps = 0;
};

// Empirical constant in the differential inequality satisfied by
// R = sum_{k<=ell} sqrt(Q_k + eps) along a solution: C* = sup F^{ab} R_ab / R.
// Crossing stencils are excluded and counted; sample-quality error if more
// than 20% of candidate points are excluded.
SubsolutionReport r_subsolution_constant(const OperatorF& F, const ScalarField& u, int ell,
                                         double eps, double gap_tol);

struct ChainReport {
    double constant = 0;     // max over points of LHS/RHS
    int evaluated = 0;
    int skipped_trivial = 0; // both sides below 1e-14
    int excluded = 0;        // crossing stencils
    int ell = 0;
    double eps = 0;
};

// Gradient chain comparison: LHS = sum_k (Q_k+eps)^{-1/2} sum_{i<=k} |D lambda_i|,
// RHS = sum_k (Q_k+eps)^{-1/2} |D Q_k|. Inconsistency error if RHS vanishes
// while LHS does not. For ell = 1 the ratio is exactly 1 where defined.
ChainReport gradient_chain_bound(const ScalarField& u, int ell, double eps, double gap_tol);

struct WeakHarnackReport {
    double lambda = 0;            // ellipticity Lambda of the coefficient field
    double subsolution_fraction = 0;
    Vec worst_point;
    double worst_violation = 0;
    double c_emp = 0;             // lq_average / (infimum + |f|_{L^n} average)
    double lq_average = 0;
    double infimum = 0;
    double f_norm = 0;
    std::vector<double> mollified_c_emp; // for eps in {2h, 4h}
    bool mollification_stable = false;   // every change <= 10%
    double q = 0;
};

// Weak Harnack measurement for a nonnegative supersolution-side function v of
// L v = a^{ij} D_ij v + b^i D_i v + c v <= f:
//   1. ellipticity of a (error if violated),
//   2. subsolution precheck at >= 99% of margin-1 points (subsolution error
//      otherwise, with the worst point),
//   3. C_emp = lq_avg(v, region, q) / (inf_region v + |f|_{L^dim} average),
//   4. mollification cross-check at eps in {2h, 4h} (<= 10% change each).
WeakHarnackReport weak_harnack_check(const std::function<SymMat(const Vec&)>& a,
                                     const std::function<Vec(const Vec&)>& b,
                                     const std::function<double(const Vec&)>& c,
                                     const ScalarField& v, const ScalarField& f,
                                     const Region& region, double q,
                                     double subsol_tol = -1.0);

// Default tolerance used by scenario runs for rank/harnack classification:
// max(1e-8, h^2) * max(1, global max eigenvalue). The h^2 floor dominates the
// finite-difference truncation of the Hessian (a quartic solution shifts a
// zero eigenvalue by h^2/6).
double default_zero_tol(const EigenField& e);

// Default gap tolerance for block/crossing decisions in the sweeps:
// max(1e-6, h^2) * max(1, global max eigenvalue). Analytically degenerate
// eigenvalue pairs reappear split by O(h^2) under finite differences, so any
// smaller tolerance misreads the split as a spatially flickering crossing.
double default_gap_tol(const EigenField& e);

} // namespace hesslab
