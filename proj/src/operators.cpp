#include "hesslab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace hesslab {

double State::scale() const {
    double s = 1.0;
    s = std::max(s, A.max_abs());
    s = std::max(s, norm_inf(p));
    s = std::max(s, std::abs(u));
    s = std::max(s, norm_inf(x));
    return s;
}

double ConvexityProbe::norm_sq() const {
    double s = Y * Y;
    for (int i = 0; i < X.dim(); ++i)
        for (int j = 0; j < X.dim(); ++j) s += X(i, j) * X(i, j);
    for (double z : Z) s += z * z;
    return s;
}

OperatorF::OperatorF(std::string name, int dim, EvalFn eval, Slots slots, double fd_step)
    : name_(std::move(name)), dim_(dim), eval_(std::move(eval)), slots_(std::move(slots)),
      fd_step_(fd_step) {
    require(dim_ >= 1 && dim_ <= kMaxDim, ErrorKind::parameter,
            "operator dimension outside [1, " + std::to_string(kMaxDim) + "]");
    require(static_cast<bool>(eval_), ErrorKind::parameter, "operator has no evaluation function");
    require(fd_step_ > 0, ErrorKind::parameter, "fd_step must be positive");
}

double OperatorF::step(const State& s) const { return fd_step_ * s.scale(); }

double OperatorF::eval(const State& s) const {
    require(s.A.dim() == dim_ && static_cast<int>(s.p.size()) == dim_ &&
                static_cast<int>(s.x.size()) == dim_,
            ErrorKind::parameter, "state dimension does not match operator");
    const double v = eval_(s);
    require(std::isfinite(v), ErrorKind::numeric, "operator value is not finite");
    return v;
}

namespace {

State with_A(const State& s, const SymMat& X, double t) {
    State r = s;
    r.A = s.A + X.scaled(t);
    return r;
}

State with_p(const State& s, const Vec& w, double t) {
    State r = s;
    for (size_t i = 0; i < r.p.size(); ++i) r.p[i] += t * w[i];
    return r;
}

State with_u(const State& s, double t) {
    State r = s;
    r.u += t;
    return r;
}

State with_x(const State& s, const Vec& z, double t) {
    State r = s;
    for (size_t i = 0; i < r.x.size(); ++i) r.x[i] += t * z[i];
    return r;
}

SymMat unit_sym(int n, int a, int b) {
    SymMat e(n);
    e.set(a, b, 1.0);
    return e;
}

Vec unit_vec(int n, int a) {
    Vec e(n, 0.0);
    e[a] = 1.0;
    return e;
}

} // namespace

SymMat OperatorF::d_A(const State& s) const {
    if (slots_.dA) {
        eval(s); // dimension check
        return slots_.dA(s);
    }
    const int n = dim_;
    const double t = step(s);
    SymMat g(n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            const SymMat e = unit_sym(n, a, b);
            const double up = eval(with_A(s, e, t));
            const double dn = eval(with_A(s, e, -t));
            // Off-diagonal probes move both mirrored entries, so the centered
            // difference returns F^{ab} + F^{ba} = 2 F^{ab}.
            const double denom = (a == b) ? 2.0 * t : 4.0 * t;
            g.set(a, b, (up - dn) / denom);
        }
    return g;
}

Vec OperatorF::d_p(const State& s) const {
    if (slots_.dp) {
        eval(s);
        return slots_.dp(s);
    }
    const int n = dim_;
    const double t = step(s);
    Vec g(n);
    for (int a = 0; a < n; ++a) {
        const Vec e = unit_vec(n, a);
        g[a] = (eval(with_p(s, e, t)) - eval(with_p(s, e, -t))) / (2.0 * t);
    }
    return g;
}

double OperatorF::d_u(const State& s) const {
    if (slots_.du) {
        eval(s);
        return slots_.du(s);
    }
    const double t = step(s);
    return (eval(with_u(s, t)) - eval(with_u(s, -t))) / (2.0 * t);
}

Vec OperatorF::d_x(const State& s) const {
    if (slots_.dx) {
        eval(s);
        return slots_.dx(s);
    }
    const int n = dim_;
    const double t = step(s);
    Vec g(n);
    for (int a = 0; a < n; ++a) {
        const Vec e = unit_vec(n, a);
        g[a] = (eval(with_x(s, e, t)) - eval(with_x(s, e, -t))) / (2.0 * t);
    }
    return g;
}

double OperatorF::dir_A(const State& s, const SymMat& X) const { return d_A(s).inner(X); }

namespace {

// Mixed centered second difference of a two-parameter perturbation.
template <class Fn>
double mixed_fd(const Fn& f, double t) {
    return (f(t, t) - f(t, -t) - f(-t, t) + f(-t, -t)) / (4.0 * t * t);
}

} // namespace

double OperatorF::d2_AA(const State& s, const SymMat& X, const SymMat& Y) const {
    if (slots_.dAA) {
        eval(s);
        return slots_.dAA(s, X, Y);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_A(with_A(s, X, a), Y, b)); }, t);
}

double OperatorF::d2_Ap(const State& s, const SymMat& X, const Vec& w) const {
    if (slots_.dAp) {
        eval(s);
        return slots_.dAp(s, X, w);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_p(with_A(s, X, a), w, b)); }, t);
}

double OperatorF::d2_Au(const State& s, const SymMat& X) const {
    if (slots_.dAu) {
        eval(s);
        return slots_.dAu(s, X);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_u(with_A(s, X, a), b)); }, t);
}

double OperatorF::d2_Ax(const State& s, const SymMat& X, const Vec& z) const {
    if (slots_.dAx) {
        eval(s);
        return slots_.dAx(s, X, z);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_x(with_A(s, X, a), z, b)); }, t);
}

double OperatorF::d2_pp(const State& s, const Vec& v, const Vec& w) const {
    if (slots_.dpp) {
        eval(s);
        return slots_.dpp(s, v, w);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_p(with_p(s, v, a), w, b)); }, t);
}

double OperatorF::d2_pu(const State& s, const Vec& w) const {
    if (slots_.dpu) {
        eval(s);
        return slots_.dpu(s, w);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_u(with_p(s, w, a), b)); }, t);
}

double OperatorF::d2_px(const State& s, const Vec& w, const Vec& z) const {
    if (slots_.dpx) {
        eval(s);
        return slots_.dpx(s, w, z);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_x(with_p(s, w, a), z, b)); }, t);
}

double OperatorF::d2_uu(const State& s) const {
    if (slots_.duu) {
        eval(s);
        return slots_.duu(s);
    }
    const double t = step(s);
    return (eval(with_u(s, t)) - 2.0 * eval(s) + eval(with_u(s, -t))) / (t * t);
}

double OperatorF::d2_ux(const State& s, const Vec& z) const {
    if (slots_.dux) {
        eval(s);
        return slots_.dux(s, z);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_x(with_u(s, a), z, b)); }, t);
}

double OperatorF::d2_xx(const State& s, const Vec& y, const Vec& z) const {
    if (slots_.dxx) {
        eval(s);
        return slots_.dxx(s, y, z);
    }
    const double t = step(s);
    return mixed_fd([&](double a, double b) { return eval(with_x(with_x(s, y, a), z, b)); }, t);
}

namespace {

struct SampleDraw {
    State state;
    SymMat X;
    Vec v, w, y, z;
};

SampleDraw draw_sample(std::mt19937_64& rng, int n, double a_shift, double x_radius,
                       double u_lo, double u_hi, double p_scale) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SampleDraw d;
    Matrix B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = normal(rng);
    SymMat A(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += B(i, k) * B(j, k);
            A.set(i, j, s + (i == j ? a_shift : 0.0));
        }
    d.state.A = A;
    d.state.p.resize(n);
    for (int i = 0; i < n; ++i) d.state.p[i] = p_scale * normal(rng);
    d.state.u = u_lo + (u_hi - u_lo) * uni(rng);
    Vec dir(n);
    double nrm = 0;
    for (int i = 0; i < n; ++i) {
        dir[i] = normal(rng);
        nrm += dir[i] * dir[i];
    }
    nrm = std::sqrt(std::max(nrm, 1e-300));
    const double rad = x_radius * std::pow(uni(rng), 1.0 / n);
    d.state.x.resize(n);
    for (int i = 0; i < n; ++i) d.state.x[i] = rad * dir[i] / nrm;

    d.X = SymMat(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) d.X.set(i, j, normal(rng));
    auto vec = [&] {
        Vec r(n);
        for (int i = 0; i < n; ++i) r[i] = normal(rng);
        return r;
    };
    d.v = vec();
    d.w = vec();
    d.y = vec();
    d.z = vec();
    return d;
}

} // namespace

double OperatorF::self_test(int samples, std::uint64_t seed, double rel_tol) const {
    require(samples > 0, ErrorKind::parameter, "sample count must be positive");
    std::mt19937_64 rng(seed);
    double worst = 0;
    OperatorF bare(name_ + "~fd", dim_, eval_, Slots{}, fd_step_);
    for (int it = 0; it < samples; ++it) {
        const SampleDraw d = draw_sample(rng, dim_, 0.5, 1.0, -1.0, 1.0, 1.0);
        const State& s = d.state;
        auto compare = [&](const char* what, double closed, double fd) {
            const double mismatch =
                std::abs(closed - fd) / std::max({1.0, std::abs(closed), std::abs(fd)});
            worst = std::max(worst, mismatch);
            require(mismatch <= rel_tol, ErrorKind::numeric,
                    std::string("closed-form ") + what +
                        " disagrees with finite differences: " + std::to_string(closed) +
                        " vs " + std::to_string(fd));
        };
        if (slots_.dA) compare("d_A", d_A(s).inner(d.X), bare.d_A(s).inner(d.X));
        if (slots_.dp) compare("d_p", dot(d_p(s), d.w), dot(bare.d_p(s), d.w));
        if (slots_.du) compare("d_u", d_u(s), bare.d_u(s));
        if (slots_.dx) compare("d_x", dot(d_x(s), d.z), dot(bare.d_x(s), d.z));
        if (slots_.dAA) compare("d2_AA", d2_AA(s, d.X, d.X), bare.d2_AA(s, d.X, d.X));
        if (slots_.dAp) compare("d2_Ap", d2_Ap(s, d.X, d.w), bare.d2_Ap(s, d.X, d.w));
        if (slots_.dAu) compare("d2_Au", d2_Au(s, d.X), bare.d2_Au(s, d.X));
        if (slots_.dAx) compare("d2_Ax", d2_Ax(s, d.X, d.z), bare.d2_Ax(s, d.X, d.z));
        if (slots_.dpp) compare("d2_pp", d2_pp(s, d.v, d.w), bare.d2_pp(s, d.v, d.w));
        if (slots_.dpu) compare("d2_pu", d2_pu(s, d.w), bare.d2_pu(s, d.w));
        if (slots_.dpx) compare("d2_px", d2_px(s, d.w, d.z), bare.d2_px(s, d.w, d.z));
        if (slots_.duu) compare("d2_uu", d2_uu(s), bare.d2_uu(s));
        if (slots_.dux) compare("d2_ux", d2_ux(s, d.z), bare.d2_ux(s, d.z));
        if (slots_.dxx) compare("d2_xx", d2_xx(s, d.y, d.z), bare.d2_xx(s, d.y, d.z));
    }
    return worst;
}

namespace {

struct KeyParts {
    std::string head;
    std::string arg;
};

KeyParts split_key(const std::string& key) {
    const auto open = key.find('(');
    require(open != std::string::npos && key.back() == ')', ErrorKind::config,
            "operator key must look like name(arg): " + key);
    return {key.substr(0, open), key.substr(open + 1, key.size() - open - 2)};
}

double parse_number(const std::string& text, const std::string& key) {
    try {
        size_t used = 0;
        const double v = std::stod(text, &used);
        require(used == text.size() && std::isfinite(v), ErrorKind::config,
                "bad numeric argument in operator key " + key);
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(ErrorKind::config, "bad numeric argument in operator key " + key);
    }
}

struct RhsDef {
    std::function<double(const Vec&)> f;
    std::function<Vec(const Vec&)> grad;
    std::function<SymMat(const Vec&)> hess;
};

RhsDef make_rhs(const std::string& id, int n) {
    RhsDef r;
    if (id == "concave") {
        r.f = [](const Vec& x) { return 3.0 - 0.5 * dot(x, x); };
        r.grad = [n](const Vec& x) {
            Vec g(n);
            for (int i = 0; i < n; ++i) g[i] = -x[i];
            return g;
        };
        r.hess = [n](const Vec&) { return SymMat::identity(n).scaled(-1.0); };
    } else if (id == "convex_sq") {
        r.f = [](const Vec& x) { return 1.0 + dot(x, x); };
        r.grad = [n](const Vec& x) {
            Vec g(n);
            for (int i = 0; i < n; ++i) g[i] = 2.0 * x[i];
            return g;
        };
        r.hess = [n](const Vec&) { return SymMat::identity(n).scaled(2.0); };
    } else if (id == "radial") {
        // Matches the radial solution u = g(|x|^2/2) with
        // g(s) = s + s^2/2 + s^3/60: trace of its Hessian.
        r.f = [n](const Vec& x) {
            const double s = 0.5 * dot(x, x);
            return n + (n + 2.0) * s + (n + 4.0) * s * s / 20.0;
        };
        r.grad = [n](const Vec& x) {
            const double s = 0.5 * dot(x, x);
            const double c = (n + 2.0) + (n + 4.0) * s / 10.0;
            Vec g(x.size());
            for (size_t i = 0; i < x.size(); ++i) g[i] = c * x[i];
            return g;
        };
        r.hess = [n](const Vec& x) {
            const double s = 0.5 * dot(x, x);
            const double c = (n + 2.0) + (n + 4.0) * s / 10.0;
            SymMat H(static_cast<int>(x.size()));
            for (int a = 0; a < H.dim(); ++a)
                for (int b = a; b < H.dim(); ++b)
                    H.set(a, b, (a == b ? c : 0.0) + (n + 4.0) / 10.0 * x[a] * x[b]);
            return H;
        };
    } else if (id == "rank_flat") {
        r.f = [n](const Vec& x) { return x[0] * x[0] + (n - 1.0); };
        r.grad = [n](const Vec& x) {
            Vec g(n, 0.0);
            g[0] = 2.0 * x[0];
            return g;
        };
        r.hess = [n](const Vec&) {
            SymMat H(n);
            H.set(0, 0, 2.0);
            return H;
        };
    } else {
        fail(ErrorKind::config,
             "unknown right-hand side id '" + id +
                 "' (known: concave, convex_sq, radial, rank_flat)");
    }
    return r;
}

OperatorF::Slots zero_second_order(int n) {
    OperatorF::Slots s;
    s.dAA = [](const State&, const SymMat&, const SymMat&) { return 0.0; };
    s.dAp = [](const State&, const SymMat&, const Vec&) { return 0.0; };
    s.dAu = [](const State&, const SymMat&) { return 0.0; };
    s.dAx = [](const State&, const SymMat&, const Vec&) { return 0.0; };
    s.dpp = [](const State&, const Vec&, const Vec&) { return 0.0; };
    s.dpu = [](const State&, const Vec&) { return 0.0; };
    s.dpx = [](const State&, const Vec&, const Vec&) { return 0.0; };
    s.duu = [](const State&) { return 0.0; };
    s.dux = [](const State&, const Vec&) { return 0.0; };
    s.dxx = [](const State&, const Vec&, const Vec&) { return 0.0; };
    s.dp = [n](const State&) { return Vec(n, 0.0); };
    s.du = [](const State&) { return 0.0; };
    s.dx = [n](const State&) { return Vec(n, 0.0); };
    return s;
}

} // namespace

OperatorPtr make_operator(const std::string& key, int dim) {
    require(dim >= 1 && dim <= kMaxDim, ErrorKind::parameter,
            "operator dimension outside [1, " + std::to_string(kMaxDim) + "]");
    const KeyParts parts = split_key(key);
    const int n = dim;
    if (parts.head == "poisson") {
        const double c = parse_number(parts.arg, key);
        OperatorF::Slots s = zero_second_order(n);
        s.dA = [n](const State&) { return SymMat::identity(n); };
        return std::make_shared<OperatorF>(
            key, n, [c](const State& st) { return st.A.trace() - c; }, std::move(s));
    }
    if (parts.head == "poisson_rhs") {
        const RhsDef rhs = make_rhs(parts.arg, n);
        OperatorF::Slots s = zero_second_order(n);
        s.dA = [n](const State&) { return SymMat::identity(n); };
        s.dx = [rhs](const State& st) {
            Vec g = rhs.grad(st.x);
            for (double& v : g) v = -v;
            return g;
        };
        s.dxx = [rhs](const State& st, const Vec& y, const Vec& z) {
            const SymMat H = rhs.hess(st.x);
            double sum = 0;
            for (int a = 0; a < H.dim(); ++a)
                for (int b = 0; b < H.dim(); ++b) sum -= y[a] * H(a, b) * z[b];
            return sum;
        };
        return std::make_shared<OperatorF>(
            key, n, [rhs](const State& st) { return st.A.trace() - rhs.f(st.x); }, std::move(s));
    }
    if (parts.head == "logdet") {
        const double c = parse_number(parts.arg, key);
        OperatorF::Slots s = zero_second_order(n);
        s.dA = [](const State& st) { return st.A.inverse(); };
        s.dAA = [](const State& st, const SymMat& X, const SymMat& Y) {
            const SymMat Ainv = st.A.inverse();
            const int m = Ainv.dim();
            // -tr(A^{-1} X A^{-1} Y)
            double sum = 0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k)
                        for (int l = 0; l < m; ++l)
                            sum -= Ainv(i, j) * X(j, k) * Ainv(k, l) * Y(l, i);
            return sum;
        };
        return std::make_shared<OperatorF>(
            key, n, [c](const State& st) { return st.A.log_det() - c; }, std::move(s));
    }
    std::ostringstream msg;
    msg << "unknown operator key '" << key << "' (known:";
    for (const auto& k : operator_registry_keys()) msg << ' ' << k;
    msg << ')';
    fail(ErrorKind::config, msg.str());
}

std::vector<std::string> operator_registry_keys() {
    return {"poisson(c)", "poisson_rhs(concave)", "poisson_rhs(convex_sq)",
            "poisson_rhs(radial)", "poisson_rhs(rank_flat)", "logdet(c)"};
}

namespace {

// The seven summands of the structure form, separated so callers can build a
// scale out of their magnitudes.
void gap_terms(const OperatorF& F, const State& s, const ConvexityProbe& probe, double out[7]) {
    const int n = F.dim();
    require(probe.X.dim() == n && static_cast<int>(probe.Z.size()) == n, ErrorKind::parameter,
            "probe dimension does not match operator");
    const SymMat Ainv = s.A.inverse();
    const SymMat M = F.d_A(s);
    // (X A^{-1} X)_{ar} = sum_{b,s} X_ab Ainv_bs X_sr
    SymMat XAX(n);
    for (int a = 0; a < n; ++a)
        for (int r = a; r < n; ++r) {
            double sum = 0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) sum += probe.X(a, b) * Ainv(b, c) * probe.X(c, r);
            XAX.set(a, r, sum);
        }
    out[0] = F.d2_AA(s, probe.X, probe.X);
    out[1] = 2.0 * M.inner(XAX);
    out[2] = F.d2_xx(s, probe.Z, probe.Z);
    out[3] = -2.0 * F.d2_Au(s, probe.X) * probe.Y;
    out[4] = -2.0 * F.d2_Ax(s, probe.X, probe.Z);
    out[5] = 2.0 * F.d2_ux(s, probe.Z) * probe.Y;
    out[6] = F.d2_uu(s) * probe.Y * probe.Y;
}

} // namespace

double convexity_gap(const OperatorF& F, const State& state, const ConvexityProbe& probe) {
    double t[7];
    gap_terms(F, state, probe, t);
    double sum = 0;
    for (double v : t) sum += v;
    return sum;
}

StructureReport check_structure(const OperatorF& F, const StructureSpec& spec) {
    require(spec.samples > 0, ErrorKind::parameter, "sample count must be positive");
    require(spec.a_shift > 0, ErrorKind::parameter, "a_shift must be positive");
    const int n = F.dim();
    std::mt19937_64 rng(spec.seed);

    StructureReport rep;
    rep.samples = spec.samples;
    rep.seed = spec.seed;
    double worst_ratio = std::numeric_limits<double>::infinity();
    State worst_state;
    ConvexityProbe worst_probe;

    for (int it = 0; it < spec.samples; ++it) {
        SampleDraw d = draw_sample(rng, n, spec.a_shift, spec.x_radius, spec.u_lo, spec.u_hi,
                                   spec.p_scale);
        ConvexityProbe probe;
        probe.X = d.X;
        probe.Y = d.v[0];
        probe.Z = d.z;
        while (probe.norm_sq() < 1e-12) {
            ++rep.retries;
            SampleDraw rd = draw_sample(rng, n, spec.a_shift, spec.x_radius, spec.u_lo,
                                        spec.u_hi, spec.p_scale);
            probe.X = rd.X;
            probe.Y = rd.v[0];
            probe.Z = rd.z;
        }
        double t[7];
        gap_terms(F, d.state, probe, t);
        double gap = 0, scale = 1.0;
        for (double v : t) {
            gap += v;
            scale += std::abs(v);
        }
        const double ratio = gap / scale;
        if (ratio < worst_ratio) {
            worst_ratio = ratio;
            rep.min_gap = gap;
            rep.min_gap_scale = scale;
            worst_state = d.state;
            worst_probe = probe;
        }
    }
    rep.pass = worst_ratio >= -spec.tol;
    if (!rep.pass) {
        // Re-verify the witness from scratch before reporting it.
        const double again = convexity_gap(F, worst_state, worst_probe);
        require(std::abs(again - rep.min_gap) <= 1e-9 * rep.min_gap_scale, ErrorKind::numeric,
                "failure witness did not reproduce on re-evaluation");
        rep.witness = StructureWitness{worst_state, worst_probe, rep.min_gap, rep.min_gap_scale};
    }
    return rep;
}

State state_at(const OperatorF& F, const ScalarField& u, int pid) {
    const Grid& g = *u.grid;
    require(g.dim() == F.dim(), ErrorKind::parameter, "field dimension does not match operator");
    require(g.admissible(pid, 1), ErrorKind::margin, "state stencil leaves the grid");
    State s;
    s.A = fd_hessian(u, pid);
    s.p = fd_gradient(u, pid);
    s.u = u[pid];
    s.x = g.coord(pid);
    return s;
}

EllipticityReport ellipticity_bounds(const OperatorF& F, const ScalarField& u) {
    const auto ids = u.grid->interior_ids(1);
    require(!ids.empty(), ErrorKind::region, "no interior points at margin 1");
    EllipticityReport rep;
    rep.min_eig = std::numeric_limits<double>::infinity();
    rep.max_eig = -std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (int pid : ids) {
        const State s = state_at(F, u, pid);
        const auto sys = eigensystem(F.d_A(s));
        const double lo = sys.eigenvalues.front(), hi = sys.eigenvalues.back();
        if (lo <= 0) {
            std::ostringstream msg;
            msg << "coefficient matrix not positive definite at (";
            const Vec x = u.grid->coord(pid);
            for (size_t k = 0; k < x.size(); ++k) msg << (k ? ", " : "") << x[k];
            msg << "): min eigenvalue " << lo;
            fail(ErrorKind::ellipticity, msg.str());
        }
        rep.min_eig = std::min(rep.min_eig, lo);
        rep.max_eig = std::max(rep.max_eig, hi);
        const double c = std::max(hi, 1.0 / lo);
        if (c > worst) {
            worst = c;
            rep.worst_point = u.grid->coord(pid);
        }
    }
    rep.lambda = std::max(rep.max_eig, 1.0 / rep.min_eig);
    return rep;
}

double pde_residual(const OperatorF& F, const ScalarField& u) {
    const auto ids = u.grid->interior_ids(1);
    require(!ids.empty(), ErrorKind::region, "no interior points at margin 1");
    double worst = 0;
    for (int pid : ids) worst = std::max(worst, std::abs(F.eval(state_at(F, u, pid))));
    return worst;
}

double twice_differentiated_identity_defect(const OperatorF& F, const ScalarField& u,
                                            int alpha, const std::vector<int>& point) {
    const Grid& g = *u.grid;
    const int n = g.dim();
    require(g.dim() == F.dim(), ErrorKind::parameter, "field dimension does not match operator");
    require(alpha >= 0 && alpha < n, ErrorKind::index, "direction index outside [0, dim)");
    const int pid = g.find(point);
    require(pid >= 0, ErrorKind::index, "point not in grid");

    const State s = state_at(F, u, pid);
    const auto T3 = fd_third_tensor(u, pid);
    const auto T4 = fd_fourth_tensor(u, pid);

    SymMat X(n);      // u_{ab alpha}
    Vec W(n);         // u_{a alpha}
    Vec third_aa(n);  // u_{a alpha alpha}
    SymMat X2(n);     // u_{ab alpha alpha}
    for (int a = 0; a < n; ++a) {
        W[a] = s.A(a, alpha);
        third_aa[a] = T3[(static_cast<size_t>(a) * n + alpha) * n + alpha];
        for (int b = a; b < n; ++b) {
            X.set(a, b, T3[(static_cast<size_t>(a) * n + b) * n + alpha]);
            X2.set(a, b, T4[((static_cast<size_t>(a) * n + b) * n + alpha) * n + alpha]);
        }
    }
    const Vec e = unit_vec(n, alpha);
    const double ua = s.p[alpha];
    const double uaa = s.A(alpha, alpha);

    double total = 0;
    total += F.dir_A(s, X2);
    total += F.d2_AA(s, X, X);
    total += 2.0 * F.d2_Ap(s, X, W);
    total += 2.0 * F.d2_Au(s, X) * ua;
    total += 2.0 * F.d2_Ax(s, X, e);
    total += dot(F.d_p(s), third_aa);
    total += F.d2_pp(s, W, W);
    total += 2.0 * F.d2_pu(s, W) * ua;
    total += 2.0 * F.d2_px(s, W, e);
    total += F.d_u(s) * uaa;
    total += F.d2_uu(s) * ua * ua;
    total += 2.0 * F.d2_ux(s, e) * ua;
    total += F.d2_xx(s, e, e);
    return std::abs(total);
}

} // namespace hesslab
