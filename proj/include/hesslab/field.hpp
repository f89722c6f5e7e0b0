#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include "hesslab/common.hpp"
#include "hesslab/linalg.hpp"

namespace hesslab {

// Lattice ball: all integer multi-indices i with sum_k i_k^2 <= rsq_max,
// coordinates i*h. Membership tests are pure integer arithmetic, so point
// sets are bit-reproducible. Points are stored in lexicographic multi-index
// order; the origin is always a point.
class Grid {
  public:
    // Spec constructor: radius/spacing must be an integer within 1e-9.
    static std::shared_ptr<const Grid> build(int dim, double spacing, double radius);
    // Internal constructor for derived (shrunken) grids: keeps lattice points
    // with sum i_k^2 <= rsq_max; radius is the reported Euclidean bound.
    static std::shared_ptr<const Grid> make(int dim, double spacing, double radius,
                                            long long rsq_max);

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    double radius() const { return radius_; }
    long long rsq_max() const { return rsq_max_; }
    int max_step() const { return m_; } // max |i_k| over points and axes
    int size() const { return npts_; }

    const int* index(int pid) const { return idx_.data() + static_cast<size_t>(pid) * dim_; }
    Vec coord(int pid) const;
    // Point id for a multi-index, or -1 if outside the ball.
    int find(const int* multi) const;
    int find(const std::vector<int>& multi) const;

    // Cube admissibility: every offset o with |o|_inf <= halfwidth lands on a
    // grid point. Used as the stencil-fits test for tensor-product stencils.
    bool admissible(int pid, int halfwidth) const;
    std::vector<int> interior_ids(int halfwidth) const;

    // Conservative shrink guaranteeing cube admissibility of `halfwidth` for
    // every kept point: sqrt(rsq') <= sqrt(rsq_max) - halfwidth*sqrt(dim).
    std::shared_ptr<const Grid> shrink(int halfwidth) const;

    bool compatible(const Grid& o) const {
        return dim_ == o.dim_ && h_ == o.h_ && rsq_max_ == o.rsq_max_;
    }

  private:
    Grid() = default;
    int dim_ = 0;
    double h_ = 0;
    double radius_ = 0;
    long long rsq_max_ = 0;
    int m_ = 0;
    int npts_ = 0;
    std::vector<int> idx_;      // dim ints per point
    std::vector<int> lookup_;   // dense (2m+1)^dim box -> pid or -1
    long long box_stride(int axis) const;
};

using GridPtr = std::shared_ptr<const Grid>;

// Immutable scalar samples on a grid. All values finite (checked on access
// paths that care; sample() checks at construction).
struct ScalarField {
    GridPtr grid;
    std::vector<double> values;
    std::string name;

    double operator[](int pid) const { return values[static_cast<size_t>(pid)]; }
    int size() const { return grid->size(); }
};

struct Region {
    Vec center;
    double radius = 0;

    bool contains(const Vec& x) const;
};

ScalarField sample(const GridPtr& grid, const std::function<double(const Vec&)>& fn,
                   const std::string& name = "field");

// Derivative with per-axis orders (total <= 4), centered stencils, O(h^2).
// Orders 1-2 need cube halfwidth 1; orders 3-4 need halfwidth 2.
double differentiate(const ScalarField& f, const std::vector<int>& point,
                     const std::vector<int>& orders);
double differentiate_at(const ScalarField& f, int pid, const std::vector<int>& orders);
int stencil_halfwidth(const std::vector<int>& orders);

// Common finite-difference bundles at a point (margin enforced per order).
Vec fd_gradient(const ScalarField& f, int pid);
SymMat fd_hessian(const ScalarField& f, int pid);
// Full symmetric third/fourth derivative tensors, index (a,b,c[,d]) flattened
// row-major; only built for grid dims <= 8.
std::vector<double> fd_third_tensor(const ScalarField& f, int pid);
std::vector<double> fd_fourth_tensor(const ScalarField& f, int pid);

// Normalized midpoint-rule L^q average over grid cells whose centers lie in
// region: (sum v^q / count)^(1/q). Constant fields return their constant.
double integrate_lq(const ScalarField& f, const Region& region, double q);

// Friedrichs-style mollification with the bump exp(-1/(1-|t|^2)) truncated at
// |t| = 1 and renormalized to unit mass on the lattice offsets |o*h| < eps.
// Output lives on the sub-grid of points at distance >= eps from the ball
// boundary, so constants are preserved exactly.
ScalarField mollify(const ScalarField& f, double eps);

// CSV: header x_1,...,x_n,value; one row per point; 17 significant digits.
void write_csv(const ScalarField& f, std::ostream& os);
void write_csv_file(const ScalarField& f, const std::string& path);

} // namespace hesslab
