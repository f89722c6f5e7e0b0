#include <doctest.h>

#include <cmath>
#include <random>

#include "hesslab/spectra.hpp"

using namespace hesslab;

namespace {

SymMat random_sym(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    SymMat a(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) a.set(i, j, g(rng));
    return a;
}

// Random orthonormal k-frame via Gram-Schmidt on Gaussian columns.
std::vector<Vec> random_frame(std::mt19937_64& rng, int n, int k) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec> frame;
    while (static_cast<int>(frame.size()) < k) {
        Vec v(n);
        for (double& x : v) x = g(rng);
        for (const Vec& u : frame) {
            const double c = dot(u, v);
            for (int i = 0; i < n; ++i) v[i] -= c * u[i];
        }
        const double len = norm2(v);
        if (len < 1e-6) continue;
        for (double& x : v) x /= len;
        frame.push_back(v);
    }
    return frame;
}

double quad_form(const SymMat& a, const Vec& v) { return dot(v, a.apply(v)); }

} // namespace

TEST_CASE("eigensystem reconstructs and orders") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const SymMat a = random_sym(rng, n, 2.0);
        const EigenSystem sys = eigensystem(a);

        for (int k = 0; k + 1 < n; ++k) CHECK(sys.eigenvalues[k] <= sys.eigenvalues[k + 1]);

        // V^T V = I and V Lambda V^T = A.
        const double scale = std::max(1.0, a.max_abs());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double ortho = 0, recon = 0;
                for (int k = 0; k < n; ++k) {
                    ortho += sys.vectors(k, i) * sys.vectors(k, j);
                    recon += sys.vectors(i, k) * sys.eigenvalues[k] * sys.vectors(j, k);
                }
                CHECK(std::abs(ortho - (i == j ? 1.0 : 0.0)) < 1e-10);
                CHECK(std::abs(recon - a(i, j)) < 1e-8 * scale);
            }
    }
}

TEST_CASE("eigensystem on known matrices") {
    SymMat d(3);
    d.set(0, 0, 3.0);
    d.set(1, 1, 1.0);
    d.set(2, 2, 2.0);
    const EigenSystem sd = eigensystem(d);
    CHECK(sd.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sd.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sd.eigenvalues[2] == doctest::Approx(3.0).epsilon(1e-14));

    SymMat a(2);
    a.set(0, 0, 2.0);
    a.set(1, 1, 2.0);
    a.set(0, 1, 1.0);
    const EigenSystem sa = eigensystem(a);
    CHECK(sa.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sa.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-14));
    // Eigenvector of 1 is (1,-1)/sqrt(2) up to sign.
    CHECK(std::abs(sa.vectors(0, 0) * sa.vectors(1, 0)) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sa.vectors(0, 0) * sa.vectors(1, 0) < 0);

    Matrix m(2, 2);
    m(0, 1) = 1.0; // not symmetric
    CHECK_THROWS_AS((void)eigensystem(m), Error);
}

TEST_CASE("sigma_k is the k-frame minimum") {
    std::mt19937_64 rng(7);
    const int n = 4;
    const SymMat a = random_sym(rng, n, 1.5);
    const EigenSystem sys = eigensystem(a);

    for (int k = 1; k <= n; ++k) {
        const double sig = sigma_k(a, k);

        // Attained by the bottom eigenvector frame.
        double bottom = 0;
        for (int j = 0; j < k; ++j) bottom += sys.eigenvalues[j];
        CHECK(sig == doctest::Approx(bottom).epsilon(1e-12));

        // Lower bound over 200 random frames: sum of Rayleigh quotients.
        for (int trial = 0; trial < 200; ++trial) {
            const auto frame = random_frame(rng, n, k);
            double tr = 0;
            for (const Vec& v : frame) tr += quad_form(a, v);
            CHECK(tr >= sig - 1e-10);
        }
    }
    CHECK_THROWS_AS((void)sigma_k(a, 0), Error);
    CHECK_THROWS_AS((void)sigma_k(a, n + 1), Error);
}

TEST_CASE("q_weight matches the weighted eigenvalue form") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const SymMat a = random_sym(rng, n, 3.0);
        const EigenSystem sys = eigensystem(a);
        const double scale = std::max(1.0, a.max_abs());
        for (int k = 1; k <= n; ++k) {
            // Q_k = sum_{i<=k} (k - i + 1) lambda_i, eigenvalues ascending.
            double weighted = 0;
            for (int i = 1; i <= k; ++i) weighted += (k - i + 1) * sys.eigenvalues[i - 1];
            CHECK(std::abs(q_weight(a, k) - weighted) < 1e-11 * scale);
            CHECK(q_weight(sys.eigenvalues, k) == doctest::Approx(weighted).epsilon(1e-11));
        }
    }
}

TEST_CASE("r_quantity domain and monotonicity") {
    SymMat a(3);
    a.set(0, 0, 0.5);
    a.set(1, 1, 1.0);
    a.set(2, 2, 4.0);

    // Hand value: Q_1 = 0.5, Q_2 = 2*0.5 + 1 = 2.
    const double eps = 0.01;
    const double byhand = std::sqrt(0.5 + eps) + std::sqrt(2.0 + eps);
    CHECK(r_quantity(a, 2, eps) == doctest::Approx(byhand).epsilon(1e-14));

    CHECK(r_quantity(a, 2, 0.1) > r_quantity(a, 2, 0.01));
    CHECK(r_quantity(a, 3, eps) > r_quantity(a, 2, eps));

    CHECK_THROWS_AS((void)r_quantity(a, 2, 0.0), Error);
    CHECK_THROWS_AS((void)r_quantity(a, 0, eps), Error);

    SymMat neg(2);
    neg.set(0, 0, -1.0);
    neg.set(1, 1, 5.0);
    CHECK_THROWS_AS((void)r_quantity(neg, 1, eps), Error);
    try {
        (void)r_quantity(neg, 1, eps);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::convexity);
    }
}

TEST_CASE("block structure splits on the gap tolerance") {
    SymMat a(3);
    a.set(0, 0, 1.0);
    a.set(1, 1, 1.0 + 1e-9);
    a.set(2, 2, 2.0);
    const EigenSystem sys = eigensystem(a);

    const BlockStructure merged = block_structure(sys, 1e-6);
    CHECK(merged.block_count() == 2);
    CHECK(merged.breakpoints == std::vector<int>{1, 2});
    CHECK(merged.block_of(0) == 0);
    CHECK(merged.block_of(1) == 0);
    CHECK(merged.rho(0) == 1);
    CHECK(merged.first_of_block(1) == 2);
    CHECK(merged.gap_tol == 1e-6);

    const BlockStructure split = block_structure(sys, 1e-12);
    CHECK(split.block_count() == 3);
    CHECK(split.breakpoints == std::vector<int>{0, 1, 2});
}

TEST_CASE("hessian eigenfield of a quadratic is exact") {
    auto g = Grid::build(2, 0.125, 1.0);
    auto u = sample(g, [](const Vec& x) { return 0.5 * x[0] * x[0] + x[1] * x[1]; });
    const EigenField e = hessian_eigenfield(u, true);

    CHECK(e.dim == 2);
    CHECK(e.convex);
    CHECK(e.source_spacing == g->spacing());
    CHECK(e.grid->rsq_max() < g->rsq_max()); // margin-1 shrink
    for (int pid = 0; pid < e.grid->size(); ++pid) {
        CHECK(e.lambda(pid, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(e.lambda(pid, 1) == doctest::Approx(2.0).epsilon(1e-13));
    }
    CHECK(e.max_eigenvalue() == doctest::Approx(2.0).epsilon(1e-13));

    // Derived fields reuse the stored spectra bitwise.
    const ScalarField l1 = lambda_field(e, 1);
    const ScalarField q1 = q_field(e, 1);
    const ScalarField s2 = sigma_field(e, 2);
    const ScalarField r2 = r_field(e, 2, 0.01);
    for (int pid = 0; pid < e.grid->size(); ++pid) {
        CHECK(q1[pid] == l1[pid]); // Q_1 == lambda_1 exactly
        CHECK(s2[pid] == doctest::Approx(e.lambda(pid, 0) + e.lambda(pid, 1)).epsilon(1e-15));
        const double q2 = 2.0 * e.lambda(pid, 0) + e.lambda(pid, 1);
        CHECK(r2[pid] ==
              doctest::Approx(std::sqrt(q1[pid] + 0.01) + std::sqrt(q2 + 0.01)).epsilon(1e-14));
    }
}

TEST_CASE("first variation residual sits at round-off on quartic radial fields") {
    // u = g(|x|^2/2) with g(s) = s + s^2/2 is a quartic: every stencil is
    // exact, so the eigenvalue-gradient identity holds to round-off.
    auto g = Grid::build(2, 0.125, 1.0);
    auto u = sample(g, [](const Vec& x) {
        const double s = 0.5 * (x[0] * x[0] + x[1] * x[1]);
        return s + 0.5 * s * s;
    });
    // Eigen gap at (0.25, 0.125) is |x|^2 = 0.078, comfortably past 10*tol.
    CHECK(first_variation_residual(u, {2, 1}, 1e-4) < 1e-10);

    // Constant Hessian: third derivatives and eigen gradients both vanish.
    auto uq = sample(g, [](const Vec& x) { return x[0] * x[0] + 0.25 * x[1] * x[1]; });
    CHECK(first_variation_residual(uq, {2, 1}, 1e-4) < 1e-12);

    // Ambiguous split (gap inside [tol, 10 tol)) must refuse loudly.
    CHECK_THROWS_AS((void)first_variation_residual(u, {2, 1}, 0.02), Error);
    try {
        (void)first_variation_residual(u, {2, 1}, 0.02);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_gap);
    }
}

TEST_CASE("second variation defect vanishes for simple spectra and trace sums") {
    auto g = Grid::build(2, 0.0625, 1.0);
    auto u = sample(g, [](const Vec& x) {
        return 0.5 * x[0] * x[0] + x[1] * x[1] +
               0.1 * x[0] * x[0] * x[1] * x[1];
    });
    const double h2 = g->spacing() * g->spacing();
    // Away from the axes both eigenvalues are simple, so each m tops its
    // block and the perturbation identity holds with O(h^2) defect.
    for (int m = 1; m <= 2; ++m) {
        const double defect = second_variation_defect(u, {3, 2}, m, 1e-6);
        CHECK(std::abs(defect) < 10.0 * h2);
    }
    // m = dim is the trace: linear in the Hessian, defect near round-off
    // relative to the fourth-derivative scale.
    CHECK(std::abs(second_variation_defect(u, {3, 2}, 2, 1e-6)) < 10.0 * h2);
}

TEST_CASE("midpoint defect on exact fields") {
    auto g = Grid::build(2, 0.125, 1.0);

    auto lin = sample(g, [](const Vec& x) { return 3.0 * x[0] - 2.0 * x[1] + 0.5; });
    CHECK(std::abs(midpoint_defect(lin, {4, 2}, {-2, 0})) < 1e-14);

    // f = -|x|^2: defect (f(x)+f(y))/2 - f(mid) = -|x-y|^2 / 4.
    auto sq = sample(g, [](const Vec& x) { return -(x[0] * x[0] + x[1] * x[1]); });
    const Vec a = g->coord(g->find({4, 2}));
    const Vec b = g->coord(g->find({-2, 0}));
    double dist_sq = 0;
    for (int k = 0; k < 2; ++k) dist_sq += (a[k] - b[k]) * (a[k] - b[k]);
    CHECK(midpoint_defect(sq, {4, 2}, {-2, 0}) ==
          doctest::Approx(-dist_sq / 4.0).epsilon(1e-13));

    CHECK_THROWS_AS((void)midpoint_defect(lin, {1, 0}, {0, 0}), Error); // odd difference
    try {
        (void)midpoint_defect(lin, {1, 0}, {0, 0});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::alignment);
    }
}

TEST_CASE("semi-concavity transport through scalar maps") {
    auto g = Grid::build(2, 0.0625, 1.0);
    auto u = sample(g, [](const Vec& x) { return 0.5 * x[0] * x[0] + x[1] * x[1]; });
    const EigenField e = hessian_eigenfield(u, true);
    const ScalarField q2 = q_field(e, 2); // constant 4 on this solution

    SUBCASE("identity map reproduces the constant") {
        ScalarMap id{[](double t) { return t; }, 1.0, true, true};
        const auto rep = compose_semiconcave_check(q2, id, 200, 99);
        CHECK(rep.pairs == 200);
        CHECK(rep.constant_f == doctest::Approx(rep.constant_hf).epsilon(1e-12));
        CHECK(rep.bound_holds);
    }

    SUBCASE("sqrt(t + eps) is increasing, concave, 1/(2 sqrt(eps))-Lipschitz") {
        const double eps = 0.01;
        ScalarMap root{[eps](double t) { return std::sqrt(t + eps); },
                       0.5 / std::sqrt(eps), true, true};
        // A field with real spread: Q_2 of a non-quadratic solution.
        auto v = sample(g, [](const Vec& x) {
            const double s = 0.5 * (x[0] * x[0] + x[1] * x[1]);
            return s + 0.5 * s * s;
        });
        const ScalarField qv = q_field(hessian_eigenfield(v, true), 2);
        const auto rep = compose_semiconcave_check(qv, root, 500, 123);
        CHECK(rep.pairs == 500);
        CHECK(rep.bound_holds);

        // Determinism: the same seed reproduces the report bitwise.
        const auto rep2 = compose_semiconcave_check(qv, root, 500, 123);
        CHECK(rep.constant_f == rep2.constant_f);
        CHECK(rep.constant_hf == rep2.constant_hf);
    }

    SUBCASE("false concavity declaration is caught") {
        auto v = sample(g, [](const Vec& x) { return x[0] + 2.0; }); // spread values
        ScalarMap sqmap{[](double t) { return t * t; }, 10.0, true, true};
        CHECK_THROWS_AS((void)compose_semiconcave_check(v, sqmap, 300, 5), Error);
        try {
            (void)compose_semiconcave_check(v, sqmap, 300, 5);
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::declaration);
        }
    }
}
