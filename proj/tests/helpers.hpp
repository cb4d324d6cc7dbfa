#pragma once

#include <cmath>
#include <vector>

#include "iva/linalg.hpp"
#include "iva/rng.hpp"

namespace testutil {

using iva::Rng;
using iva::linalg::cdouble;
using iva::linalg::ComplexMatrix;
using iva::linalg::ComplexVector;

inline ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.complex_normal();
    return m;
}

inline ComplexVector random_vector(std::size_t n, Rng& rng) {
    ComplexVector v(n);
    for (cdouble& c : v) c = rng.complex_normal();
    return v;
}

// M^H M + ridge I, guaranteed Hermitian positive definite
inline ComplexMatrix random_hpd(std::size_t n, Rng& rng, double ridge = 1.0) {
    const ComplexMatrix m = random_matrix(n, n, rng);
    ComplexMatrix a = multiply(m.adjoint(), m);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += ridge;
    return iva::linalg::symmetrize(a);
}

// Hermitian positive semi-definite with a prescribed rank
inline ComplexMatrix random_hpsd(std::size_t n, std::size_t rank, Rng& rng) {
    const ComplexMatrix m = random_matrix(rank, n, rng);
    return iva::linalg::symmetrize(multiply(m.adjoint(), m));
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double matrix_rel_err(const ComplexMatrix& got, const ComplexMatrix& want) {
    ComplexMatrix diff = got;
    diff -= want;
    return diff.frobenius_norm() / std::max(want.frobenius_norm(), 1e-300);
}

} // namespace testutil
