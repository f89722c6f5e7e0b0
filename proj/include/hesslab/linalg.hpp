#pragma once

#include <cmath>
#include <cstddef>

#include "hesslab/common.hpp"

namespace hesslab {

// Dense row-major matrix for dimensions up to kMaxDim. Value semantics; no
// expression templates, no views. Everything in this project is desk scale.
inline constexpr int kMaxDim = 16;

class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0);
    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    Matrix transposed() const;
    double max_abs() const;

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Symmetric matrix; stores the full square but writes go through set() which
// mirrors the entry. operator() is read-only by design.
class SymMat {
  public:
    SymMat() = default;
    explicit SymMat(int n, double fill = 0.0);
    static SymMat identity(int n);
    // Checks |A - A^T| <= tol * max(1, |A|_inf) entry-wise, then symmetrizes.
    static SymMat from_matrix(const Matrix& A, double tol = 1e-12);

    int dim() const { return n_; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
    void set(int i, int j, double v) {
        a_[static_cast<size_t>(i) * n_ + j] = v;
        a_[static_cast<size_t>(j) * n_ + i] = v;
    }
    void add(int i, int j, double v) { set(i, j, (*this)(i, j) + v); }

    double max_abs() const;
    double frobenius() const;
    double trace() const;
    SymMat scaled(double t) const;
    friend SymMat operator+(const SymMat& a, const SymMat& b);
    friend SymMat operator-(const SymMat& a, const SymMat& b);

    // <A, B>_F = sum_ij A_ij B_ij.
    double inner(const SymMat& b) const;
    Vec apply(const Vec& v) const;

    // Cholesky-based inverse and log-determinant; definiteness error if A is
    // not positive definite.
    SymMat inverse() const;
    double log_det() const;

  private:
    int n_ = 0;
    std::vector<double> a_;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double s = 0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

} // namespace hesslab
