#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "iva/errors.hpp"

namespace iva::linalg {

using cdouble = std::complex<double>;
using ComplexVector = std::vector<cdouble>;

// Dense complex matrix, row-major, double precision. Sized for the problems
// at hand: a handful of rows, never more than a few dozen.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries);

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(std::span<const double> d);
    static ComplexMatrix diagonal(std::span<const cdouble> d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cdouble& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cdouble& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    cdouble* data() { return data_.data(); }
    const cdouble* data() const { return data_.data(); }
    cdouble* row(std::size_t i) { return data_.data() + i * cols_; }
    const cdouble* row(std::size_t i) const { return data_.data() + i * cols_; }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conjugate() const;

    double frobenius_norm() const;
    double max_abs() const;
    bool all_finite() const;

    // Throws InvalidInput when an entry is NaN or Inf.
    void require_finite(const char* what = "matrix") const;

    ComplexMatrix& operator+=(const ComplexMatrix& other);
    ComplexMatrix& operator-=(const ComplexMatrix& other);
    ComplexMatrix& operator*=(cdouble scale);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(cdouble s, ComplexMatrix a) { return a *= s; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cdouble> data_;
};

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector multiply(const ComplexMatrix& a, std::span<const cdouble> x);
inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return multiply(a, b); }

// Inner product with the first argument conjugated, sum conj(a_i) b_i.
cdouble vdot(std::span<const cdouble> a, std::span<const cdouble> b);
double norm(std::span<const cdouble> v);

// ||M - M^H||_F, the deviation from Hermitian symmetry.
double hermitian_error(const ComplexMatrix& m);
// (M + M^H) / 2. Absorbs round-off asymmetry before a decomposition.
ComplexMatrix symmetrize(const ComplexMatrix& m);

// Relative tolerance for accepting a matrix as Hermitian.
inline constexpr double kHermitianRelTol = 1e-10;

struct EigenDecomposition {
    std::vector<double> eigenvalues; // ascending
    ComplexMatrix eigenvectors;      // unit-norm columns, eigenvectors.col(i) <-> eigenvalues[i]
};

// Triangular factor G of a Hermitian positive definite matrix, lower
// triangular with positive real diagonal, satisfying A = G^H G.
// Throws NotPositiveDefinite when a pivot drops below tolerance.
ComplexMatrix cholesky(const ComplexMatrix& a);

// Conventional factor L with A = L L^H (used internally and by the
// generalized eigensolver).
ComplexMatrix cholesky_llh(const ComplexMatrix& a);

// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
// Eigenvalues ascending, eigenvector matrix unitary. Throws
// ConvergenceFailure if the off-diagonal mass refuses to vanish.
EigenDecomposition eigh(const ComplexMatrix& u);

// Dense solve A X = B via LU with partial pivoting. Throws Singular.
ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector solve(const ComplexMatrix& a, std::span<const cdouble> b);
ComplexMatrix inverse(const ComplexMatrix& a);

// log |det A|. Throws Singular when the determinant underflows to zero
// (|det| below about 1e-300).
double log_abs_det(const ComplexMatrix& a);

ComplexVector solve_lower_triangular(const ComplexMatrix& l, std::span<const cdouble> b);
ComplexVector solve_upper_triangular(const ComplexMatrix& u, std::span<const cdouble> b);
ComplexMatrix solve_lower_triangular(const ComplexMatrix& l, const ComplexMatrix& b);
ComplexMatrix solve_upper_triangular(const ComplexMatrix& u, const ComplexMatrix& b);

// Solves the Hermitian definite pencil P w = phi Q w. Eigenvalues are real
// and returned ascending; eigenvector i is column i, normalized to unit
// Euclidean length. Throws Singular when Q is not definite.
EigenDecomposition generalized_eig(const ComplexMatrix& p, const ComplexMatrix& q);

} // namespace iva::linalg
