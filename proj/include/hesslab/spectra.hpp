#pragma once

#include <cstdint>
#include <functional>

#include "hesslab/field.hpp"
#include "hesslab/linalg.hpp"

namespace hesslab {

// Eigen-decomposition of one symmetric matrix: ascending eigenvalues, the
// k-th column of vectors is the eigenvector of eigenvalues[k].
struct EigenSystem {
    Vec eigenvalues;
    Matrix vectors;

    int dim() const { return static_cast<int>(eigenvalues.size()); }
};

// Cyclic Jacobi, deterministic, dim <= 16. Accepts a general square matrix
// and enforces symmetry within 1e-12 relative tolerance.
EigenSystem eigensystem(const Matrix& A);
EigenSystem eigensystem(const SymMat& A);

// sigma_k = sum of the k smallest eigenvalues (concave, monotone, Lipschitz
// with constant k in Frobenius norm).
double sigma_k(const SymMat& A, int k);

// Q_k = lambda_k + 2 lambda_{k-1} + ... + k lambda_1, computed as the double
// sum of sigma-style partial sums; verified against the weighted form within
// 1e-12 relative tolerance.
double q_weight(const SymMat& A, int k);
double q_weight(const Vec& ascending_eigenvalues, int k);

// R = sum_{k<=ell} sqrt(Q_k + eps). Requires eps > 0 and Q_k >= -1e-8.
double r_quantity(const SymMat& A, int ell, double eps);
double r_quantity(const Vec& ascending_eigenvalues, int ell, double eps);

// Multiplicity blocks of an ascending spectrum: maximal runs whose
// consecutive gaps are <= gap_tol. breakpoints holds the last 0-based index
// of each block, so rho(m) = breakpoints[block_of(m)].
struct BlockStructure {
    std::vector<int> breakpoints;
    double gap_tol = 0;

    int block_count() const { return static_cast<int>(breakpoints.size()); }
    int block_of(int m0) const; // block index containing 0-based eigen index
    int rho(int m0) const;      // 0-based top index of m0's block
    int first_of_block(int b) const;
};

BlockStructure block_structure(const EigenSystem& sys, double gap_tol);

// Per-point eigensystems of the finite-difference Hessian of u; lives on the
// margin-1 shrink of u's grid. convex = caller asserts u is convex, recorded
// so downstream classification can validate nonnegativity.
struct EigenField {
    GridPtr grid;
    int dim = 0;
    std::vector<double> eigenvalues; // dim per point, ascending
    std::vector<double> vectors;     // dim*dim per point, column k = eigvec k
    std::string source;
    bool convex = false;
    double source_spacing = 0;

    const double* lambda(int pid) const {
        return eigenvalues.data() + static_cast<size_t>(pid) * dim;
    }
    double lambda(int pid, int k) const { return lambda(pid)[k]; }
    double max_eigenvalue() const;
};

EigenField hessian_eigenfield(const ScalarField& u, bool convex_hint = false);

// Derived scalar fields (share the EigenField's grid and its stored spectra,
// so identities like Q_1 == lambda_1 hold bitwise).
ScalarField lambda_field(const EigenField& e, int k);       // k-th smallest, 1-based
ScalarField sigma_field(const EigenField& e, int k);        // sum of k smallest
ScalarField q_field(const EigenField& e, int k);            // Q_k
ScalarField r_field(const EigenField& e, int ell, double eps);

// First-variation identity residual at a grid point: rotates third
// derivatives into the eigenframe and compares u_{kli} with the block
// eigenvalue gradient times delta_{kl}. Expected O(h^2) for smooth u with
// well-separated blocks (inter-block gaps >= 10*gap_tol).
double first_variation_residual(const ScalarField& u, const std::vector<int>& point,
                                double gap_tol);

// Second-variation inequality defect at a point for the sum of the m smallest
// eigenvalues: smallest eigenvalue of (RHS - LHS) where
//   LHS = D^2 of the eigenvalue-sum field (finite differences),
//   RHS = sum of rotated fourth derivatives + 2 sum_{alpha<=m, q>rho}
//         u_{q alpha a} u_{q alpha b} / (lambda_alpha - lambda_q).
// Expected >= -O(h^2); also <= O(h^2) when m tops its block.
double second_variation_defect(const ScalarField& u, const std::vector<int>& point, int m,
                               double gap_tol);

// (f(x)+f(y))/2 - f((x+y)/2); multi-index difference must be even per axis.
double midpoint_defect(const ScalarField& f, const std::vector<int>& x,
                       const std::vector<int>& y);

// Scalar map with declared one-sided properties, used to transport
// semi-concavity bounds through compositions like sqrt(Q_k + eps).
struct ScalarMap {
    std::function<double(double)> fn;
    double lipschitz = 1.0;
    bool increasing = true;
    bool concave = true;
};

struct SemiconcavityReport {
    double constant_f = 0;     // max midpoint defect of f per |x-y|^2
    double constant_hf = 0;    // same for h(f)
    double lipschitz = 0;      // declared constant of h
    int pairs = 0;
    bool bound_holds = false;  // constant_hf <= L * max(constant_f, 0) + tol
};

// Samples `pairs` aligned point pairs (seeded, deterministic), verifies the
// declared monotonicity/concavity/Lipschitz properties of h on the sampled
// values (declaration error on violation), and reports empirical midpoint
// constants of f and h(f).
SemiconcavityReport compose_semiconcave_check(const ScalarField& f, const ScalarMap& h,
                                              int pairs, std::uint64_t seed);

// EigenField dump: header x_1..x_n,lambda_1..lambda_n, 17 significant digits.
void write_eigen_csv(const EigenField& e, std::ostream& os);

} // namespace hesslab
