#include <doctest.h>

#include "helpers.hpp"
#include "iva/linalg.hpp"

using namespace iva;
using namespace iva::linalg;
using testutil::matrix_rel_err;
using testutil::random_hpd;
using testutil::random_hpsd;
using testutil::random_matrix;
using testutil::random_vector;

TEST_CASE("cholesky identity and diagonal") {
    const ComplexMatrix g = cholesky(ComplexMatrix::identity(3));
    CHECK(matrix_rel_err(g, ComplexMatrix::identity(3)) < 1e-15);

    std::vector<double> d{2.0, 2.0};
    const ComplexMatrix g2 = cholesky(ComplexMatrix::diagonal(d));
    CHECK(g2(0, 0).real() == doctest::Approx(std::sqrt(2.0)));
    CHECK(g2(1, 1).real() == doctest::Approx(std::sqrt(2.0)));
    CHECK(std::abs(g2(1, 0)) < 1e-15);
    CHECK(std::abs(g2(0, 1)) == 0.0);
}

TEST_CASE("cholesky reconstructs A = G^H G with lower-triangular G") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5;
        const ComplexMatrix a = random_hpd(n, rng);
        const ComplexMatrix g = cholesky(a);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(g(i, i).imag() == 0.0);
            CHECK(g(i, i).real() > 0.0);
            for (std::size_t j = i + 1; j < n; ++j) CHECK(g(i, j) == cdouble{});
        }
        const ComplexMatrix rebuilt = multiply(g.adjoint(), g);
        CHECK(matrix_rel_err(rebuilt, a) < 1e-10);
    }
}

TEST_CASE("cholesky rejects indefinite input") {
    ComplexMatrix a = ComplexMatrix::identity(2);
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(cholesky(a), NotPositiveDefinite);
}

TEST_CASE("eigh diagonal and identity") {
    std::vector<double> d{3.0, 1.0, 2.0};
    const EigenDecomposition dec = eigh(ComplexMatrix::diagonal(d));
    REQUIRE(dec.eigenvalues.size() == 3);
    CHECK(dec.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(dec.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(dec.eigenvalues[2] == doctest::Approx(3.0));

    const EigenDecomposition id = eigh(ComplexMatrix::identity(2));
    CHECK(id.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(id.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(matrix_rel_err(multiply(id.eigenvectors, id.eigenvectors.adjoint()),
                         ComplexMatrix::identity(2)) < 1e-9);
}

TEST_CASE("eigh reconstruction on random PSD") {
    Rng rng(102);
    const std::size_t n = 6;
    const ComplexMatrix u = random_hpsd(n, 4, rng);
    const EigenDecomposition dec = eigh(u);
    ComplexMatrix scaled = dec.eigenvectors;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= dec.eigenvalues[j];
    CHECK(matrix_rel_err(multiply(scaled, dec.eigenvectors.adjoint()), u) < 1e-9);
}

TEST_CASE("decomposition contracts hold over random instances d=1..8") {
    Rng rng(103);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + (rng.next_u64() % 8);
        const ComplexMatrix a = random_hpd(n, rng, 0.5);

        const ComplexMatrix g = cholesky(a);
        CHECK(matrix_rel_err(multiply(g.adjoint(), g), a) < 1e-10);

        const EigenDecomposition dec = eigh(a);
        // ascending eigenvalues
        for (std::size_t i = 1; i < n; ++i) CHECK(dec.eigenvalues[i] >= dec.eigenvalues[i - 1]);
        // unitary eigenvectors
        CHECK(matrix_rel_err(multiply(dec.eigenvectors.adjoint(), dec.eigenvectors),
                             ComplexMatrix::identity(n)) < 1e-9);
        // per-column residual ||U sigma - phi sigma|| <= 1e-9 ||U||_F
        const double scale = a.frobenius_norm();
        for (std::size_t j = 0; j < n; ++j) {
            ComplexVector col(n);
            for (std::size_t i = 0; i < n; ++i) col[i] = dec.eigenvectors(i, j);
            const ComplexVector av = multiply(a, col);
            double resid = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                resid += std::norm(av[i] - dec.eigenvalues[j] * col[i]);
            CHECK(std::sqrt(resid) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("solve and inverse") {
    Rng rng(104);
    SUBCASE("identity and diagonal") {
        const ComplexMatrix b = random_matrix(3, 2, rng);
        const ComplexMatrix x = solve(ComplexMatrix::identity(3), b);
        CHECK(matrix_rel_err(x, b) < 1e-14);

        std::vector<double> d{2.0, 4.0};
        const ComplexMatrix inv = inverse(ComplexMatrix::diagonal(d));
        CHECK(inv(0, 0).real() == doctest::Approx(0.5));
        CHECK(inv(1, 1).real() == doctest::Approx(0.25));
    }
    SUBCASE("construct-then-solve recovers X") {
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + (rng.next_u64() % 6);
            const ComplexMatrix a = random_matrix(n, n, rng);
            const ComplexMatrix x_true = random_matrix(n, 3, rng);
            const ComplexMatrix b = multiply(a, x_true);
            const ComplexMatrix x = solve(a, b);
            ComplexMatrix resid = multiply(a, x);
            resid -= b;
            CHECK(resid.frobenius_norm() <= 1e-8 * a.frobenius_norm() * x.frobenius_norm() + 1e-12);
        }
    }
    SUBCASE("singular input throws") {
        ComplexMatrix a(2, 2);
        a(0, 0) = 1.0;
        a(0, 1) = 2.0;
        a(1, 0) = 2.0;
        a(1, 1) = 4.0;
        CHECK_THROWS_AS(solve(a, ComplexMatrix::identity(2)), Singular);
    }
}

TEST_CASE("cholesky-based triangular solve agrees with LU solve") {
    Rng rng(105);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + (rng.next_u64() % 5);
        const ComplexMatrix a = random_hpd(n, rng);
        const ComplexVector b = random_vector(n, rng);

        const ComplexMatrix g = cholesky(a);
        // A x = G^H (G x) = b
        const ComplexVector u = solve_upper_triangular(g.adjoint(), b);
        const ComplexVector x_chol = solve_lower_triangular(g, u);
        const ComplexVector x_lu = solve(a, b);
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err += std::norm(x_chol[i] - x_lu[i]);
            scale += std::norm(x_lu[i]);
        }
        CHECK(std::sqrt(err) <= 1e-8 * std::max(1.0, std::sqrt(scale)));
    }
}

TEST_CASE("generalized eigenproblem") {
    Rng rng(106);
    SUBCASE("P = Q gives unit eigenvalues") {
        const ComplexMatrix p = random_hpd(2, rng);
        const EigenDecomposition dec = generalized_eig(p, p);
        CHECK(dec.eigenvalues[0] == doctest::Approx(1.0));
        CHECK(dec.eigenvalues[1] == doctest::Approx(1.0));
    }
    SUBCASE("diagonal pencil") {
        std::vector<double> d{4.0, 1.0};
        const EigenDecomposition dec = generalized_eig(ComplexMatrix::diagonal(d),
                                                       ComplexMatrix::identity(2));
        CHECK(dec.eigenvalues[0] == doctest::Approx(1.0));
        CHECK(dec.eigenvalues[1] == doctest::Approx(4.0));
        CHECK(std::abs(dec.eigenvectors(1, 0)) == doctest::Approx(1.0)); // e_2 for phi = 1
        CHECK(std::abs(dec.eigenvectors(0, 1)) == doctest::Approx(1.0)); // e_1 for phi = 4
    }
    SUBCASE("random pencils satisfy P w = phi Q w") {
        for (int trial = 0; trial < 200; ++trial) {
            const ComplexMatrix p = random_hpd(2, rng, 0.5);
            const ComplexMatrix q = random_hpd(2, rng, 0.5);
            const EigenDecomposition dec = generalized_eig(p, q);
            for (std::size_t j = 0; j < 2; ++j) {
                ComplexVector w{dec.eigenvectors(0, j), dec.eigenvectors(1, j)};
                const ComplexVector pw = multiply(p, w);
                const ComplexVector qw = multiply(q, w);
                double resid = 0.0;
                for (std::size_t i = 0; i < 2; ++i)
                    resid += std::norm(pw[i] - dec.eigenvalues[j] * qw[i]);
                CHECK(std::sqrt(resid) <= 1e-9 * (p.frobenius_norm() + q.frobenius_norm()));
            }
        }
    }
}

TEST_CASE("hermitian utilities") {
    Rng rng(107);
    const ComplexMatrix m = random_matrix(4, 4, rng);
    const ComplexMatrix s = symmetrize(m);
    CHECK(hermitian_error(s) < 1e-14 * std::max(1.0, s.frobenius_norm()));
    CHECK(hermitian_error(m) > 0.1); // a random matrix is far from Hermitian
}
