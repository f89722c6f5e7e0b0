#include "hesslab/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace hesslab {

namespace {

constexpr long long kMaxBoxCells = 1LL << 27;

std::string point_label(const int* idx, int dim) {
    std::string s = "(";
    for (int k = 0; k < dim; ++k) s += (k ? "," : "") + std::to_string(idx[k]);
    return s + ")";
}

} // namespace

long long Grid::box_stride(int axis) const {
    long long s = 1;
    for (int k = axis + 1; k < dim_; ++k) s *= 2 * m_ + 1;
    return s;
}

std::shared_ptr<const Grid> Grid::make(int dim, double spacing, double radius,
                                       long long rsq_max) {
    require(dim >= 1, ErrorKind::config, "dimension must be >= 1");
    require(spacing > 0, ErrorKind::config, "spacing must be positive");
    // radius 0 is the origin-only ball, reachable through shrink().
    require(radius >= 0 && radius <= 1.0 + 1e-12, ErrorKind::config,
            "radius must lie in [0, 1]");
    require(rsq_max >= 0, ErrorKind::config, "empty lattice ball");

    auto g = std::shared_ptr<Grid>(new Grid());
    g->dim_ = dim;
    g->h_ = spacing;
    g->radius_ = radius;
    g->rsq_max_ = rsq_max;
    g->m_ = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rsq_max)) + 1e-9));

    long long cells = 1;
    const long long side = 2LL * g->m_ + 1;
    for (int k = 0; k < dim; ++k) {
        cells *= side;
        require(cells <= kMaxBoxCells, ErrorKind::capacity,
                "lattice box of " + std::to_string(side) + "^" + std::to_string(dim) +
                    " cells exceeds the point-count budget");
    }
    g->lookup_.assign(static_cast<size_t>(cells), -1);

    // Lexicographic odometer over the box, keeping lattice-ball members.
    std::vector<int> it(dim, -g->m_);
    std::vector<long long> sq_prefix(dim + 1, 0);
    while (true) {
        long long sq = 0;
        for (int k = 0; k < dim; ++k) sq += static_cast<long long>(it[k]) * it[k];
        if (sq <= rsq_max) {
            long long cell = 0;
            for (int k = 0; k < dim; ++k) cell = cell * side + (it[k] + g->m_);
            g->lookup_[static_cast<size_t>(cell)] = g->npts_;
            g->idx_.insert(g->idx_.end(), it.begin(), it.end());
            ++g->npts_;
        }
        int axis = dim - 1;
        while (axis >= 0 && it[axis] == g->m_) it[axis--] = -g->m_;
        if (axis < 0) break;
        ++it[axis];
    }
    require(g->npts_ > 0, ErrorKind::config, "grid has no points");
    return g;
}

std::shared_ptr<const Grid> Grid::build(int dim, double spacing, double radius) {
    require(spacing > 0, ErrorKind::config, "spacing must be positive");
    const double steps = radius / spacing;
    const long long m = std::llround(steps);
    require(m >= 1 && std::abs(steps - static_cast<double>(m)) <= 1e-9, ErrorKind::config,
            "radius must be an integer multiple of spacing (got radius/spacing = " +
                std::to_string(steps) + ")");
    return make(dim, spacing, radius, m * m);
}

Vec Grid::coord(int pid) const {
    const int* ix = index(pid);
    Vec x(dim_);
    for (int k = 0; k < dim_; ++k) x[k] = ix[k] * h_;
    return x;
}

int Grid::find(const int* multi) const {
    const long long side = 2LL * m_ + 1;
    long long cell = 0;
    for (int k = 0; k < dim_; ++k) {
        if (multi[k] < -m_ || multi[k] > m_) return -1;
        cell = cell * side + (multi[k] + m_);
    }
    return lookup_[static_cast<size_t>(cell)];
}

int Grid::find(const std::vector<int>& multi) const {
    require(static_cast<int>(multi.size()) == dim_, ErrorKind::index,
            "multi-index dimension mismatch");
    return find(multi.data());
}

bool Grid::admissible(int pid, int halfwidth) const {
    const int* ix = index(pid);
    long long corner = 0;
    for (int k = 0; k < dim_; ++k) {
        const long long a = std::abs(ix[k]) + halfwidth;
        corner += a * a;
    }
    return corner <= rsq_max_;
}

std::vector<int> Grid::interior_ids(int halfwidth) const {
    std::vector<int> ids;
    for (int p = 0; p < npts_; ++p)
        if (admissible(p, halfwidth)) ids.push_back(p);
    return ids;
}

std::shared_ptr<const Grid> Grid::shrink(int halfwidth) const {
    const double root = std::sqrt(static_cast<double>(rsq_max_)) -
                        halfwidth * std::sqrt(static_cast<double>(dim_));
    require(root > 0, ErrorKind::margin, "grid too small to shrink by margin " +
                                             std::to_string(halfwidth));
    const long long rsq = static_cast<long long>(std::floor(root * root + 1e-9));
    return make(dim_, h_, h_ * std::sqrt(static_cast<double>(rsq)), rsq);
}

bool Region::contains(const Vec& x) const {
    double sq = 0;
    for (size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - center[k];
        sq += d * d;
    }
    return std::sqrt(sq) <= radius + 1e-12 * (1.0 + radius);
}

ScalarField sample(const GridPtr& grid, const std::function<double(const Vec&)>& fn,
                   const std::string& name) {
    require(static_cast<bool>(grid), ErrorKind::config, "null grid");
    ScalarField f;
    f.grid = grid;
    f.name = name;
    f.values.resize(grid->size());
    for (int p = 0; p < grid->size(); ++p) {
        const double v = fn(grid->coord(p));
        require(std::isfinite(v), ErrorKind::sampling,
                "non-finite sample at point " + point_label(grid->index(p), grid->dim()));
        f.values[static_cast<size_t>(p)] = v;
    }
    return f;
}

namespace {

struct Stencil1D {
    int offsets[5];
    double weights[5];
    int count;
    int halfwidth;
};

// Centered stencils, O(h^2); order o is exact on polynomials of degree o+1.
Stencil1D stencil_for(int order) {
    switch (order) {
        case 0: return {{0}, {1.0}, 1, 0};
        case 1: return {{-1, 1}, {-0.5, 0.5}, 2, 1};
        case 2: return {{-1, 0, 1}, {1.0, -2.0, 1.0}, 3, 1};
        case 3: return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}, 4, 2};
        case 4: return {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}, 5, 2};
        default: fail(ErrorKind::order, "derivative order " + std::to_string(order) +
                                            " unsupported (max 4 per request)");
    }
}

} // namespace

int stencil_halfwidth(const std::vector<int>& orders) {
    int total = 0;
    for (int o : orders) {
        require(o >= 0, ErrorKind::order, "negative derivative order");
        total += o;
    }
    require(total <= 4, ErrorKind::order,
            "total derivative order " + std::to_string(total) + " exceeds 4");
    if (total == 0) return 0;
    return total >= 3 ? 2 : 1;
}

double differentiate_at(const ScalarField& f, int pid, const std::vector<int>& orders) {
    const Grid& g = *f.grid;
    require(static_cast<int>(orders.size()) == g.dim(), ErrorKind::order,
            "orders list must have one entry per axis");
    require(pid >= 0 && pid < g.size(), ErrorKind::index, "point id out of range");
    const int w = stencil_halfwidth(orders);
    if (w == 0) return f[pid];
    require(g.admissible(pid, w), ErrorKind::margin,
            "stencil of halfwidth " + std::to_string(w) + " leaves the grid at point " +
                point_label(g.index(pid), g.dim()));

    const int dim = g.dim();
    int total = 0;
    std::vector<Stencil1D> st(dim);
    for (int k = 0; k < dim; ++k) {
        st[k] = stencil_for(orders[k]);
        total += orders[k];
    }
    const double scale = std::pow(g.spacing(), -total);

    // Product iteration over the per-axis stencil entries.
    std::vector<int> pick(dim, 0);
    std::vector<int> probe(dim);
    double acc = 0;
    while (true) {
        double wgt = 1.0;
        for (int k = 0; k < dim; ++k) {
            probe[k] = g.index(pid)[k] + st[k].offsets[pick[k]];
            wgt *= st[k].weights[pick[k]];
        }
        const int nb = g.find(probe.data());
        require(nb >= 0, ErrorKind::margin, "stencil point missing from grid");
        acc += wgt * f[nb];
        int axis = dim - 1;
        while (axis >= 0 && pick[axis] == st[axis].count - 1) pick[axis--] = 0;
        if (axis < 0) break;
        ++pick[axis];
    }
    return acc * scale;
}

double differentiate(const ScalarField& f, const std::vector<int>& point,
                     const std::vector<int>& orders) {
    const int pid = f.grid->find(point);
    require(pid >= 0, ErrorKind::index, "point not in grid");
    return differentiate_at(f, pid, orders);
}

Vec fd_gradient(const ScalarField& f, int pid) {
    const Grid& g = *f.grid;
    require(g.admissible(pid, 1), ErrorKind::margin, "gradient stencil leaves the grid");
    const int dim = g.dim();
    Vec grad(dim);
    std::vector<int> probe(g.index(pid), g.index(pid) + dim);
    for (int a = 0; a < dim; ++a) {
        probe[a] += 1;
        const int up = g.find(probe.data());
        probe[a] -= 2;
        const int dn = g.find(probe.data());
        probe[a] += 1;
        grad[a] = (f[up] - f[dn]) / (2.0 * g.spacing());
    }
    return grad;
}

SymMat fd_hessian(const ScalarField& f, int pid) {
    const Grid& g = *f.grid;
    require(g.admissible(pid, 1), ErrorKind::margin, "Hessian stencil leaves the grid");
    const int dim = g.dim();
    const double h = g.spacing();
    SymMat H(dim);
    std::vector<int> probe(g.index(pid), g.index(pid) + dim);
    for (int a = 0; a < dim; ++a) {
        probe[a] += 1;
        const double up = f[g.find(probe.data())];
        probe[a] -= 2;
        const double dn = f[g.find(probe.data())];
        probe[a] += 1;
        H.set(a, a, (up - 2.0 * f[pid] + dn) / (h * h));
    }
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) {
            double s = 0;
            for (int sa : {+1, -1})
                for (int sb : {+1, -1}) {
                    probe[a] += sa;
                    probe[b] += sb;
                    s += sa * sb * f[g.find(probe.data())];
                    probe[a] -= sa;
                    probe[b] -= sb;
                }
            H.set(a, b, s / (4.0 * h * h));
        }
    return H;
}

namespace {

std::vector<double> fd_tensor(const ScalarField& f, int pid, int rank) {
    const int dim = f.grid->dim();
    require(dim <= 8, ErrorKind::capacity, "derivative tensors limited to dim <= 8");
    size_t total = 1;
    for (int r = 0; r < rank; ++r) total *= static_cast<size_t>(dim);
    std::vector<double> T(total, 0.0);

    // Evaluate one representative per index multiset, then fan out.
    std::vector<int> axes(rank, 0);
    while (true) {
        bool sorted = true;
        for (int r = 0; r + 1 < rank; ++r)
            if (axes[r] > axes[r + 1]) sorted = false;
        if (sorted) {
            std::vector<int> orders(dim, 0);
            for (int r = 0; r < rank; ++r) ++orders[axes[r]];
            const double v = differentiate_at(f, pid, orders);
            std::vector<int> perm = axes;
            do {
                size_t flat = 0;
                for (int r = 0; r < rank; ++r) flat = flat * dim + perm[r];
                T[flat] = v;
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        int r = rank - 1;
        while (r >= 0 && axes[r] == dim - 1) axes[r--] = 0;
        if (r < 0) break;
        ++axes[r];
    }
    return T;
}

} // namespace

std::vector<double> fd_third_tensor(const ScalarField& f, int pid) {
    return fd_tensor(f, pid, 3);
}

std::vector<double> fd_fourth_tensor(const ScalarField& f, int pid) {
    return fd_tensor(f, pid, 4);
}

double integrate_lq(const ScalarField& f, const Region& region, double q) {
    const Grid& g = *f.grid;
    require(q > 0, ErrorKind::parameter, "exponent q must be positive");
    require(static_cast<int>(region.center.size()) == g.dim(), ErrorKind::region,
            "region center dimension mismatch");
    require(region.radius > 0, ErrorKind::region, "region radius must be positive");
    require(norm2(region.center) + region.radius <= g.radius() + 1e-9, ErrorKind::region,
            "region not contained in the grid ball");

    double acc = 0;
    long long count = 0;
    double lo = 0, hi = 0;
    for (int p = 0; p < g.size(); ++p) {
        if (!region.contains(g.coord(p))) continue;
        const double v = f[p];
        require(v >= 0, ErrorKind::domain,
                "negative value " + std::to_string(v) + " at point " +
                    point_label(g.index(p), g.dim()) + " inside the region");
        lo = count == 0 ? v : std::min(lo, v);
        hi = count == 0 ? v : std::max(hi, v);
        acc += (q == 1.0) ? v : std::pow(v, q);
        ++count;
    }
    require(count > 0, ErrorKind::region, "region contains no grid cells");
    if (lo == hi) return lo; // constants come back exactly, any exponent
    const double mean = acc / static_cast<double>(count);
    return (q == 1.0) ? mean : std::pow(mean, 1.0 / q);
}

ScalarField mollify(const ScalarField& f, double eps) {
    const Grid& g = *f.grid;
    require(eps >= g.spacing() - 1e-12, ErrorKind::kernel,
            "mollification width " + std::to_string(eps) + " below grid spacing " +
                std::to_string(g.spacing()));
    const double inner = g.radius() - eps;
    require(inner >= 0, ErrorKind::region, "mollification width leaves an empty grid");
    const double steps = inner / g.spacing();
    const long long rsq = static_cast<long long>(std::floor(steps * steps + 1e-9));
    auto out_grid = Grid::make(g.dim(), g.spacing(), g.spacing() * std::sqrt(static_cast<double>(rsq)), rsq);

    // Discrete bump kernel on offsets with |o*h| < eps, renormalized to mass 1.
    const double q = eps / g.spacing();
    const double qsq = q * q;
    long long osq_max;
    if (std::abs(qsq - std::llround(qsq)) < 1e-9)
        osq_max = std::llround(qsq) - 1;
    else
        osq_max = static_cast<long long>(std::floor(qsq));
    const int K = static_cast<int>(std::floor(std::sqrt(static_cast<double>(std::max<long long>(osq_max, 0)))));

    std::vector<std::vector<int>> offsets;
    std::vector<double> weights;
    double mass = 0;
    std::vector<int> o(g.dim(), -K);
    while (true) {
        long long sq = 0;
        for (int k = 0; k < g.dim(); ++k) sq += static_cast<long long>(o[k]) * o[k];
        if (sq <= osq_max) {
            const double t2 = static_cast<double>(sq) / qsq;
            const double w = std::exp(-1.0 / (1.0 - t2));
            offsets.push_back(o);
            weights.push_back(w);
            mass += w;
        }
        int axis = g.dim() - 1;
        while (axis >= 0 && o[axis] == K) o[axis--] = -K;
        if (axis < 0) break;
        ++o[axis];
    }
    for (double& w : weights) w /= mass;

    ScalarField out;
    out.grid = out_grid;
    out.name = f.name + "~mollified";
    out.values.resize(out_grid->size());
    std::vector<int> probe(g.dim());
    for (int p = 0; p < out_grid->size(); ++p) {
        const int* ix = out_grid->index(p);
        double acc = 0;
        for (size_t j = 0; j < offsets.size(); ++j) {
            for (int k = 0; k < g.dim(); ++k) probe[k] = ix[k] + offsets[j][k];
            const int nb = g.find(probe.data());
            require(nb >= 0, ErrorKind::kernel, "mollifier support left the source grid");
            acc += weights[j] * f[nb];
        }
        out.values[static_cast<size_t>(p)] = acc;
    }
    return out;
}

namespace {

void write_g17(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

} // namespace

void write_csv(const ScalarField& f, std::ostream& os) {
    const Grid& g = *f.grid;
    for (int k = 0; k < g.dim(); ++k) os << "x_" << (k + 1) << ",";
    os << "value\n";
    for (int p = 0; p < g.size(); ++p) {
        const Vec x = g.coord(p);
        for (int k = 0; k < g.dim(); ++k) {
            write_g17(os, x[k]);
            os << ",";
        }
        write_g17(os, f[p]);
        os << "\n";
    }
}

void write_csv_file(const ScalarField& f, const std::string& path) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path + " for writing");
    write_csv(f, os);
    os.flush();
    require(static_cast<bool>(os), ErrorKind::io, "write failed for " + path);
}

} // namespace hesslab
