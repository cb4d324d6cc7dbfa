#include "iva/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iva::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_square(const ComplexMatrix& m, const char* what) {
    if (!m.square()) throw InvalidInput(std::string(what) + ": matrix must be square");
}

void require_hermitian(const ComplexMatrix& m, const char* what) {
    require_square(m, what);
    const double scale = m.frobenius_norm();
    if (hermitian_error(m) > kHermitianRelTol * std::max(scale, 1e-300))
        throw InvalidInput(std::string(what) + ": matrix is not Hermitian within tolerance");
}

} // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) throw InvalidInput("ComplexMatrix: entry count does not match shape");
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const cdouble> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

ComplexMatrix ComplexMatrix::conjugate() const {
    ComplexMatrix m = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) m.data_[i] = std::conj(m.data_[i]);
    return m;
}

double ComplexMatrix::frobenius_norm() const {
    double s = 0.0;
    for (const cdouble& v : data_) s += std::norm(v);
    return std::sqrt(s);
}

double ComplexMatrix::max_abs() const {
    double s = 0.0;
    for (const cdouble& v : data_) s = std::max(s, std::abs(v));
    return s;
}

bool ComplexMatrix::all_finite() const {
    for (const cdouble& v : data_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

void ComplexMatrix::require_finite(const char* what) const {
    if (!all_finite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cdouble scale) {
    for (cdouble& v : data_) v *= scale;
    return *this;
}

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidInput("multiply: inner dimensions differ");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cdouble aik = a(i, k);
            if (aik == cdouble{}) continue;
            const cdouble* brow = b.row(k);
            cdouble* crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

ComplexVector multiply(const ComplexMatrix& a, std::span<const cdouble> x) {
    if (a.cols() != x.size()) throw InvalidInput("multiply: vector length mismatch");
    ComplexVector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cdouble s{};
        const cdouble* arow = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s += arow[j] * x[j];
        y[i] = s;
    }
    return y;
}

cdouble vdot(std::span<const cdouble> a, std::span<const cdouble> b) {
    cdouble s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double norm(std::span<const cdouble> v) {
    double s = 0.0;
    for (const cdouble& x : v) s += std::norm(x);
    return std::sqrt(s);
}

double hermitian_error(const ComplexMatrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s += std::norm(m(i, j) - std::conj(m(j, i)));
    return std::sqrt(s);
}

ComplexMatrix symmetrize(const ComplexMatrix& m) {
    ComplexMatrix s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
    return s;
}

ComplexMatrix cholesky_llh(const ComplexMatrix& a_in) {
    require_hermitian(a_in, "cholesky");
    const ComplexMatrix a = symmetrize(a_in);
    const std::size_t n = a.rows();

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i).real()));
    const double pivot_tol = static_cast<double>(n) * kEps * scale;

    ComplexMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
        if (!(d > pivot_tol))
            throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " below tolerance");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cdouble s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / ljj;
        }
    }
    return l;
}

ComplexMatrix cholesky(const ComplexMatrix& a) {
    const std::size_t n = a.rows();
    require_square(a, "cholesky");
    // Factor the index-reversed matrix and flip back; this yields the lower
    // triangular G with A = G^H G instead of the conventional A = L L^H.
    ComplexMatrix flipped(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) flipped(i, j) = a(n - 1 - i, n - 1 - j);
    const ComplexMatrix l = cholesky_llh(flipped);
    ComplexMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) g(i, j) = std::conj(l(n - 1 - j, n - 1 - i));
    return g;
}

EigenDecomposition eigh(const ComplexMatrix& u_in) {
    require_hermitian(u_in, "eigh");
    ComplexMatrix a = symmetrize(u_in);
    const std::size_t n = a.rows();
    ComplexMatrix v = ComplexMatrix::identity(n);

    const double norm_a = std::max(a.frobenius_norm(), 1e-300);
    const double off_tol = 1e-15 * norm_a;
    const int max_sweeps = 64;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * std::norm(a(i, j));
        return std::sqrt(s);
    };

    int sweep = 0;
    while (off_norm() > off_tol) {
        if (++sweep > max_sweeps) throw ConvergenceFailure("eigh: Jacobi sweeps exhausted");
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cdouble apq = a(p, q);
                const double r = std::abs(apq);
                if (r <= kEps * off_tol + 1e-300) continue;
                const cdouble phase = apq / r;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cdouble spq = s * phase;        // rotation entry (p,q)
                // columns: A <- A R
                for (std::size_t i = 0; i < n; ++i) {
                    const cdouble aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - std::conj(spq) * aiq;
                    a(i, q) = spq * aip + c * aiq;
                }
                // rows: A <- R^H A
                for (std::size_t j = 0; j < n; ++j) {
                    const cdouble apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - spq * aqj;
                    a(q, j) = std::conj(spq) * apj + c * aqj;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t i = 0; i < n; ++i) {
                    const cdouble vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - std::conj(spq) * viq;
                    v(i, q) = spq * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    EigenDecomposition dec;
    dec.eigenvalues.resize(n);
    dec.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        dec.eigenvalues[k] = a(order[k], order[k]).real();
        for (std::size_t i = 0; i < n; ++i) dec.eigenvectors(i, k) = v(i, order[k]);
    }
    return dec;
}

namespace {

struct Lu {
    ComplexMatrix lu;
    std::vector<std::size_t> perm; // row permutation, lu row i came from input row perm[i]
};

Lu lu_factor(const ComplexMatrix& a) {
    require_square(a, "lu");
    const std::size_t n = a.rows();
    Lu f{a, std::vector<std::size_t>(n)};
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
    const double tol = static_cast<double>(n) * kEps * std::max(a.max_abs(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(f.lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(f.lu(i, k));
            if (m > best) { best = m; piv = i; }
        }
        if (!(best > tol)) throw Singular("lu: pivot below tolerance at column " + std::to_string(k));
        if (piv != k) {
            std::swap(f.perm[k], f.perm[piv]);
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
        }
        const cdouble d = f.lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cdouble lik = f.lu(i, k) / d;
            f.lu(i, k) = lik;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= lik * f.lu(k, j);
        }
    }
    return f;
}

ComplexMatrix lu_solve(const Lu& f, const ComplexMatrix& b) {
    const std::size_t n = f.lu.rows();
    if (b.rows() != n) throw InvalidInput("solve: right-hand side rows mismatch");
    ComplexMatrix x(n, b.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = b(f.perm[i], j);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = k + 1; i < n; ++i) {
            const cdouble lik = f.lu(i, k);
            if (lik == cdouble{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) -= lik * x(k, j);
        }
    for (std::size_t k = n; k-- > 0;) {
        const cdouble d = f.lu(k, k);
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cdouble s = x(k, j);
            for (std::size_t i = k + 1; i < n; ++i) s -= f.lu(k, i) * x(i, j);
            x(k, j) = s / d;
        }
    }
    return x;
}

} // namespace

ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b) {
    return lu_solve(lu_factor(a), b);
}

ComplexVector solve(const ComplexMatrix& a, std::span<const cdouble> b) {
    ComplexMatrix rhs(b.size(), 1);
    for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
    const ComplexMatrix x = solve(a, rhs);
    ComplexVector out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = x(i, 0);
    return out;
}

ComplexMatrix inverse(const ComplexMatrix& a) {
    return solve(a, ComplexMatrix::identity(a.rows()));
}

double log_abs_det(const ComplexMatrix& a) {
    const Lu f = lu_factor(a); // throws Singular on zero pivot
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::log(std::abs(f.lu(i, i)));
    if (s < std::log(1e-300)) throw Singular("log_abs_det: determinant underflows");
    return s;
}

ComplexVector solve_lower_triangular(const ComplexMatrix& l, std::span<const cdouble> b) {
    const std::size_t n = l.rows();
    ComplexVector x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        cdouble s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * x[j];
        if (l(i, i) == cdouble{}) throw Singular("triangular solve: zero diagonal");
        x[i] = s / l(i, i);
    }
    return x;
}

ComplexVector solve_upper_triangular(const ComplexMatrix& u, std::span<const cdouble> b) {
    const std::size_t n = u.rows();
    ComplexVector x(b.begin(), b.end());
    for (std::size_t i = n; i-- > 0;) {
        cdouble s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= u(i, j) * x[j];
        if (u(i, i) == cdouble{}) throw Singular("triangular solve: zero diagonal");
        x[i] = s / u(i, i);
    }
    return x;
}

ComplexMatrix solve_lower_triangular(const ComplexMatrix& l, const ComplexMatrix& b) {
    ComplexMatrix x = b;
    const std::size_t n = l.rows();
    for (std::size_t col = 0; col < b.cols(); ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            cdouble s = x(i, col);
            for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * x(j, col);
            if (l(i, i) == cdouble{}) throw Singular("triangular solve: zero diagonal");
            x(i, col) = s / l(i, i);
        }
    }
    return x;
}

ComplexMatrix solve_upper_triangular(const ComplexMatrix& u, const ComplexMatrix& b) {
    ComplexMatrix x = b;
    const std::size_t n = u.rows();
    for (std::size_t col = 0; col < b.cols(); ++col) {
        for (std::size_t i = n; i-- > 0;) {
            cdouble s = x(i, col);
            for (std::size_t j = i + 1; j < n; ++j) s -= u(i, j) * x(j, col);
            if (u(i, i) == cdouble{}) throw Singular("triangular solve: zero diagonal");
            x(i, col) = s / u(i, i);
        }
    }
    return x;
}

EigenDecomposition generalized_eig(const ComplexMatrix& p, const ComplexMatrix& q) {
    ComplexMatrix l;
    try {
        l = cholesky_llh(q);
    } catch (const NotPositiveDefinite& e) {
        throw Singular(std::string("generalized_eig: right matrix not definite (") + e.what() + ")");
    }
    // S = L^{-1} P L^{-H}; the standard problem on S has the same eigenvalues
    // and eigenvectors w = L^{-H} y.
    const ComplexMatrix lp = solve_lower_triangular(l, p);
    const ComplexMatrix s = symmetrize(solve_lower_triangular(l, lp.adjoint()).adjoint());
    EigenDecomposition dec = eigh(s);
    ComplexMatrix w = solve_upper_triangular(l.adjoint(), dec.eigenvectors);
    for (std::size_t k = 0; k < w.cols(); ++k) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) nrm += std::norm(w(i, k));
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < w.rows(); ++i) w(i, k) /= nrm;
    }
    dec.eigenvectors = std::move(w);
    return dec;
}

} // namespace iva::linalg
