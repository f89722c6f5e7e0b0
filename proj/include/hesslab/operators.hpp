#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "hesslab/field.hpp"
#include "hesslab/linalg.hpp"
#include "hesslab/spectra.hpp"

namespace hesslab {

// Evaluation state of a scalar operator F(A, p, u, x): Hessian candidate A,
// gradient p, value u, position x.
struct State {
    SymMat A;
    Vec p;
    double u = 0;
    Vec x;

    double scale() const; // max(1, |A|_inf, |p|_inf, |u|, |x|_inf)
};

// Direction probe for the structure-condition quadratic form.
struct ConvexityProbe {
    SymMat X;
    double Y = 0;
    Vec Z;

    double norm_sq() const;
};

// Fully nonlinear operator with optional closed-form derivative slots. The
// derivative convention treats the entries of A as independent (so F^{ab} is
// the symmetric gradient matrix with off-diagonals counted once); missing
// slots fall back to centered finite differences with step
// fd_step * max(1, |state|) per perturbed slot.
class OperatorF {
  public:
    using EvalFn = std::function<double(const State&)>;

    struct Slots {
        std::function<SymMat(const State&)> dA;  // F^{ab}
        std::function<Vec(const State&)> dp;     // F^{p_a}
        std::function<double(const State&)> du;  // F^{u}
        std::function<Vec(const State&)> dx;     // F^{x_a}
        // Bilinear second-derivative contractions against directions.
        std::function<double(const State&, const SymMat&, const SymMat&)> dAA;
        std::function<double(const State&, const SymMat&, const Vec&)> dAp;
        std::function<double(const State&, const SymMat&)> dAu;
        std::function<double(const State&, const SymMat&, const Vec&)> dAx;
        std::function<double(const State&, const Vec&, const Vec&)> dpp;
        std::function<double(const State&, const Vec&)> dpu;
        std::function<double(const State&, const Vec&, const Vec&)> dpx;
        std::function<double(const State&)> duu;
        std::function<double(const State&, const Vec&)> dux;
        std::function<double(const State&, const Vec&, const Vec&)> dxx;
    };

    OperatorF(std::string name, int dim, EvalFn eval, Slots slots = {}, double fd_step = 1e-4);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    double fd_step() const { return fd_step_; }

    double eval(const State& s) const;

    // First derivatives.
    SymMat d_A(const State& s) const;
    Vec d_p(const State& s) const;
    double d_u(const State& s) const;
    Vec d_x(const State& s) const;
    double dir_A(const State& s, const SymMat& X) const; // sum F^{ab} X_ab

    // Second derivatives as bilinear forms.
    double d2_AA(const State& s, const SymMat& X, const SymMat& Y) const;
    double d2_Ap(const State& s, const SymMat& X, const Vec& w) const;
    double d2_Au(const State& s, const SymMat& X) const;
    double d2_Ax(const State& s, const SymMat& X, const Vec& z) const;
    double d2_pp(const State& s, const Vec& v, const Vec& w) const;
    double d2_pu(const State& s, const Vec& w) const;
    double d2_px(const State& s, const Vec& w, const Vec& z) const;
    double d2_uu(const State& s) const;
    double d2_ux(const State& s, const Vec& z) const;
    double d2_xx(const State& s, const Vec& y, const Vec& z) const;

    // Compares every closed-form slot against its finite-difference fallback
    // on `samples` random states; numeric error if any disagrees beyond
    // rel_tol. Returns the worst relative mismatch.
    double self_test(int samples, std::uint64_t seed, double rel_tol = 1e-5) const;

  private:
    std::string name_;
    int dim_;
    EvalFn eval_;
    Slots slots_;
    double fd_step_;

    double step(const State& s) const;
};

using OperatorPtr = std::shared_ptr<const OperatorF>;

// Registry: "poisson(c)", "poisson_rhs(f_id)", "logdet(c)" with closed-form
// slots. f_id in {concave, convex_sq, radial, rank_flat}.
OperatorPtr make_operator(const std::string& key, int dim);
std::vector<std::string> operator_registry_keys();

// Structure-condition quadratic form at (state, probe):
//   F^{ab,rs} X_ab X_rs + 2 F^{ar} A^{bs} X_ab X_rs + F^{x_a,x_b} Z_a Z_b
//   - 2 F^{ab,u} X_ab Y - 2 F^{ab,x_r} X_ab Z_r + 2 F^{u,x_a} Y Z_a
//   + F^{u,u} Y^2,
// where A^{bs} are the entries of A^{-1}. Nonnegativity of this form (for all
// probes, A positive definite) is the convexity/structure hypothesis.
double convexity_gap(const OperatorF& F, const State& state, const ConvexityProbe& probe);

struct StructureSpec {
    int samples = 10000;
    std::uint64_t seed = 0;
    double a_shift = 1e-2;   // A = B B^T + a_shift * I
    double x_radius = 1.0;   // x uniform in this ball
    double u_lo = -1.0, u_hi = 1.0;
    double p_scale = 1.0;    // p ~ N(0, p_scale^2) per component
    double tol = 1e-8;       // PASS iff gap >= -tol * scale at every sample
};

struct StructureWitness {
    State state;
    ConvexityProbe probe;
    double gap = 0;
    double scale = 0;
};

struct StructureReport {
    bool pass = true;
    int samples = 0;
    int retries = 0;
    double min_gap = 0;
    double min_gap_scale = 1;
    std::uint64_t seed = 0;
    std::optional<StructureWitness> witness; // re-verified when pass == false
};

// Seed-deterministic sampling of states and probes; a failure witness is
// re-evaluated before being reported. scale = 1 + sum |term_i| of the form,
// which makes the tolerance invariant under probe scaling.
StructureReport check_structure(const OperatorF& F, const StructureSpec& spec);

struct EllipticityReport {
    double min_eig = 0;
    double max_eig = 0;
    double lambda = 0; // max(max_eig, 1/min_eig)
    Vec worst_point;   // point attaining the binding bound
};

// Eigenvalue bounds of F^{ab} along a solution field, over margin-1 interior
// points. Ellipticity error (with the point) if min_eig <= 0 anywhere.
EllipticityReport ellipticity_bounds(const OperatorF& F, const ScalarField& u);

// sup |F(D^2 u, Du, u, x)| over margin-1 interior points.
double pde_residual(const OperatorF& F, const ScalarField& u);

// Residual of the twice-differentiated equation in direction alpha (0-based)
// at a point: all 12 chain-rule terms assembled from finite differences of u
// (orders up to 4) and the operator's derivative slots. O(h^2) for smooth
// exact solutions.
double twice_differentiated_identity_defect(const OperatorF& F, const ScalarField& u,
                                            int alpha, const std::vector<int>& point);

// State of u at a grid point (FD Hessian and gradient); margin-1.
State state_at(const OperatorF& F, const ScalarField& u, int pid);

} // namespace hesslab
