#include "hesslab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace hesslab {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return "configuration error";
        case ErrorKind::capacity: return "capacity error";
        case ErrorKind::sampling: return "sampling error";
        case ErrorKind::margin: return "interior-margin error";
        case ErrorKind::order: return "unsupported-order error";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::region: return "region error";
        case ErrorKind::kernel: return "kernel-resolution error";
        case ErrorKind::symmetry: return "symmetry error";
        case ErrorKind::numeric: return "numeric error";
        case ErrorKind::index: return "index error";
        case ErrorKind::parameter: return "parameter error";
        case ErrorKind::convexity: return "convexity error";
        case ErrorKind::degenerate_gap: return "degenerate-gap error";
        case ErrorKind::singular_gap: return "singular-gap error";
        case ErrorKind::alignment: return "alignment error";
        case ErrorKind::declaration: return "declaration error";
        case ErrorKind::definiteness: return "definiteness error";
        case ErrorKind::ellipticity: return "ellipticity-violation error";
        case ErrorKind::convergence: return "convergence error";
        case ErrorKind::sample_quality: return "unreliable-sample error";
        case ErrorKind::inconsistency: return "inconsistency error";
        case ErrorKind::subsolution: return "not-a-subsolution error";
        case ErrorKind::io: return "I/O error";
    }
    return "error";
}

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {
    require(rows >= 0 && cols >= 0, ErrorKind::config, "negative matrix size");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::max_abs() const {
    double s = 0;
    for (double v : a_) s = std::max(s, std::abs(v));
    return s;
}

SymMat::SymMat(int n, double fill) : n_(n), a_(static_cast<size_t>(n) * n, fill) {
    require(n >= 1, ErrorKind::config, "symmetric matrix dimension must be >= 1");
    require(n <= kMaxDim, ErrorKind::capacity,
            "symmetric matrix dimension " + std::to_string(n) + " exceeds " +
                std::to_string(kMaxDim));
}

SymMat SymMat::identity(int n) {
    SymMat m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

SymMat SymMat::from_matrix(const Matrix& A, double tol) {
    require(A.rows() == A.cols(), ErrorKind::config, "matrix not square");
    const int n = A.rows();
    const double scale = std::max(1.0, A.max_abs());
    SymMat s(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            require(std::abs(A(i, j) - A(j, i)) <= tol * scale, ErrorKind::symmetry,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") asymmetric beyond tolerance");
            s.set(i, j, 0.5 * (A(i, j) + A(j, i)));
        }
    return s;
}

double SymMat::max_abs() const {
    double s = 0;
    for (double v : a_) s = std::max(s, std::abs(v));
    return s;
}

double SymMat::frobenius() const {
    double s = 0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

double SymMat::trace() const {
    double s = 0;
    for (int i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
}

SymMat SymMat::scaled(double t) const {
    SymMat r(n_);
    for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] * t;
    return r;
}

SymMat operator+(const SymMat& a, const SymMat& b) {
    require(a.n_ == b.n_, ErrorKind::config, "dimension mismatch in matrix sum");
    SymMat r(a.n_);
    for (size_t k = 0; k < a.a_.size(); ++k) r.a_[k] = a.a_[k] + b.a_[k];
    return r;
}

SymMat operator-(const SymMat& a, const SymMat& b) {
    require(a.n_ == b.n_, ErrorKind::config, "dimension mismatch in matrix difference");
    SymMat r(a.n_);
    for (size_t k = 0; k < a.a_.size(); ++k) r.a_[k] = a.a_[k] - b.a_[k];
    return r;
}

double SymMat::inner(const SymMat& b) const {
    require(n_ == b.n_, ErrorKind::config, "dimension mismatch in inner product");
    double s = 0;
    for (size_t k = 0; k < a_.size(); ++k) s += a_[k] * b.a_[k];
    return s;
}

Vec SymMat::apply(const Vec& v) const {
    require(static_cast<int>(v.size()) == n_, ErrorKind::config, "dimension mismatch in apply");
    Vec r(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
}

namespace {

// Lower-triangular Cholesky factor; definiteness error if a pivot fails.
std::vector<double> cholesky(const SymMat& A) {
    const int n = A.dim();
    std::vector<double> L(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (int k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
            if (i == j) {
                require(s > 0.0, ErrorKind::definiteness,
                        "matrix not positive definite (pivot " + std::to_string(i) + ")");
                L[i * n + i] = std::sqrt(s);
            } else {
                L[i * n + j] = s / L[j * n + j];
            }
        }
    }
    return L;
}

} // namespace

SymMat SymMat::inverse() const {
    const int n = n_;
    auto L = cholesky(*this);
    // Invert L in place (forward substitution per column), then A^-1 = L^-T L^-1.
    std::vector<double> Linv(static_cast<size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) {
        Linv[j * n + j] = 1.0 / L[j * n + j];
        for (int i = j + 1; i < n; ++i) {
            double s = 0;
            for (int k = j; k < i; ++k) s -= L[i * n + k] * Linv[k * n + j];
            Linv[i * n + j] = s / L[i * n + i];
        }
    }
    SymMat r(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0;
            for (int k = std::max(i, j); k < n; ++k) s += Linv[k * n + i] * Linv[k * n + j];
            r.set(i, j, s);
        }
    return r;
}

double SymMat::log_det() const {
    auto L = cholesky(*this);
    double s = 0;
    for (int i = 0; i < n_; ++i) s += std::log(L[i * n_ + i]);
    return 2.0 * s;
}

} // namespace hesslab
