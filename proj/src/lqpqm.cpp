#include "iva/lqpqm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace iva::lqpqm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct SupportTerm {
    double phi;   // eigenvalue
    double coef;  // phi * |v_tilde|^2
};

// Exact-zero support; used by the public secular function evaluations.
std::vector<SupportTerm> exact_support(std::span<const double> phi, std::span<const cdouble> vt) {
    std::vector<SupportTerm> s;
    s.reserve(phi.size());
    for (std::size_t m = 0; m < phi.size(); ++m) {
        const double c = phi[m] * std::norm(vt[m]);
        if (c != 0.0) s.push_back({phi[m], c});
    }
    return s;
}

double eval_secular(double lambda, const std::vector<SupportTerm>& s, double z) {
    double acc = 0.0;
    for (const SupportTerm& t : s) {
        const double d = lambda - t.phi;
        acc += t.coef / (d * d);
    }
    return lambda * lambda * acc - lambda + z;
}

double eval_secular_derivative(double lambda, const std::vector<SupportTerm>& s) {
    double acc = 0.0;
    for (const SupportTerm& t : s) {
        const double d = lambda - t.phi;
        acc += t.phi * t.coef / (d * d * d);
    }
    return -2.0 * lambda * acc - 1.0;
}

void check_poles(double lambda, const std::vector<SupportTerm>& s) {
    if (s.empty()) return;
    double phi_max = 0.0;
    for (const SupportTerm& t : s) phi_max = std::max(phi_max, std::abs(t.phi));
    for (const SupportTerm& t : s)
        if (std::abs(lambda - t.phi) < 1e-14 * phi_max)
            throw PoleEvaluation("secular: lambda within 1e-14 * phi_max of a pole");
}

// Largest real root of x^3 + a2 x^2 + a1 x + a0, by Cardano with the
// trigonometric branch for three real roots, polished by Newton.
double largest_real_cubic_root(double a2, double a1, double a0) {
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    const double half_q = 0.5 * q;
    const double third_p = p / 3.0;
    const double disc = half_q * half_q + third_p * third_p * third_p;

    double t;
    if (disc > 0.0) {
        // one real root; pick the sign combination that avoids cancellation
        const double root_disc = std::sqrt(disc);
        const double w = (q <= 0.0) ? (-half_q + root_disc) : (-half_q - root_disc);
        const double big = std::cbrt(w);
        const double small = (big != 0.0) ? -third_p / big : 0.0; // big * small = -p/3
        t = big + small;
    } else if (p == 0.0) {
        t = std::cbrt(-q);
    } else {
        const double r = std::sqrt(-third_p);
        double cosarg = -half_q / (r * r * r);
        cosarg = std::clamp(cosarg, -1.0, 1.0);
        const double theta = std::acos(cosarg);
        t = 2.0 * r * std::cos(theta / 3.0); // largest of the three real roots
    }

    double x = t - a2 / 3.0;
    for (int i = 0; i < 3; ++i) {
        const double f = ((x + a2) * x + a1) * x + a0;
        const double fp = (3.0 * x + 2.0 * a2) * x + a1;
        if (fp == 0.0) break;
        const double step = f / fp;
        x -= step;
        if (std::abs(step) <= 4.0 * kEps * std::abs(x)) break;
    }
    return x;
}

} // namespace

Problem::Problem(ComplexMatrix a_, ComplexVector b_, ComplexMatrix c_, ComplexVector d_, double z_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)), z(z_) {
    const std::size_t n = b.size();
    if (!a.square() || a.rows() != n || !c.square() || c.rows() != n || d.size() != n)
        throw InvalidInput("lqpqm: inconsistent dimensions");
    if (!(z >= 0.0)) throw InvalidInput("lqpqm: z must be non-negative");
    a.require_finite("lqpqm A");
    c.require_finite("lqpqm C");
    for (const cdouble& v : b)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidInput("lqpqm b: non-finite");
    for (const cdouble& v : d)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidInput("lqpqm d: non-finite");
}

Canonical to_canonical(const Problem& p) {
    Canonical c;
    c.chol_factor = linalg::cholesky(p.a);
    // U = G^{-H} C G^{-1}; two triangular solves against G^H (upper).
    const ComplexMatrix gh = c.chol_factor.adjoint();
    const ComplexMatrix t = linalg::solve_upper_triangular(gh, p.c);
    c.u = linalg::symmetrize(linalg::solve_upper_triangular(gh, t.adjoint()));
    ComplexVector diff(p.b.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = p.b[i] - p.d[i];
    c.v = linalg::multiply(c.chol_factor, diff);
    c.z = p.z;
    c.offset = p.b;
    return c;
}

double objective(const Problem& p, std::span<const cdouble> q) {
    ComplexVector qb(q.size()), qd(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        qb[i] = q[i] - p.b[i];
        qd[i] = q[i] - p.d[i];
    }
    const double quad = linalg::vdot(qb, linalg::multiply(p.a, qb)).real();
    const double logarg = linalg::vdot(qd, linalg::multiply(p.c, qd)).real() + p.z;
    if (!(logarg > 0.0)) return std::numeric_limits<double>::infinity();
    return quad - std::log(logarg);
}

double canonical_objective(const Canonical& c, std::span<const cdouble> y) {
    ComplexVector yv(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yv[i] = y[i] + c.v[i];
    double quad = 0.0;
    for (const cdouble& v : y) quad += std::norm(v);
    const double logarg = linalg::vdot(yv, linalg::multiply(c.u, yv)).real() + c.z;
    if (!(logarg > 0.0)) return std::numeric_limits<double>::infinity();
    return quad - std::log(logarg);
}

double secular(double lambda, std::span<const double> phi, std::span<const cdouble> v_tilde, double z) {
    const auto s = exact_support(phi, v_tilde);
    check_poles(lambda, s);
    return eval_secular(lambda, s, z);
}

double secular_derivative(double lambda, std::span<const double> phi,
                          std::span<const cdouble> v_tilde, double z) {
    (void)z;
    const auto s = exact_support(phi, v_tilde);
    check_poles(lambda, s);
    return eval_secular_derivative(lambda, s);
}

double stationary_objective(double lambda, std::span<const double> phi,
                            std::span<const cdouble> v_tilde, double z) {
    const auto s = exact_support(phi, v_tilde);
    double acc = 0.0;
    for (const SupportTerm& t : s) acc += t.coef / (lambda - t.phi);
    return 1.0 - acc - z / lambda - std::log(lambda);
}

double init_cubic_poly(double phi_max, double vmax_sq, double z) {
    if (!(phi_max > 0.0)) throw InvalidInput("init_cubic_poly: phi_max must be positive");
    // -x^3 + c2 x^2 - c1 x + c0 = 0  <=>  x^3 - c2 x^2 + c1 x - c0 = 0
    const double c2 = phi_max * vmax_sq + 2.0 * phi_max + z;
    const double c1 = (phi_max + 2.0 * z) * phi_max;
    const double c0 = phi_max * phi_max * z;
    return largest_real_cubic_root(-c2, c1, -c0);
}

SecularRoot solve_secular(std::span<const double> phi, std::span<const cdouble> v_tilde, double z) {
    const auto s = exact_support(phi, v_tilde);
    if (s.empty()) throw InvalidInput("solve_secular: empty support");

    double phi_max = 0.0;
    for (const SupportTerm& t : s) phi_max = std::max(phi_max, t.phi);
    double vmax_sq = 0.0;
    for (const SupportTerm& t : s)
        if (t.phi >= phi_max * (1.0 - 1e-12)) vmax_sq += t.coef / phi_max;

    double lambda = std::max(init_cubic_poly(phi_max, vmax_sq, z), z);
    // keep strictly right of the pole at phi_max
    const double guard = phi_max * (1.0 + 4.0 * kEps);
    lambda = std::max(lambda, guard);

    SecularRoot out;
    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        const double f = eval_secular(lambda, s, z);
        const double fscale = std::max({1.0, std::abs(z), std::abs(lambda)});
        if (std::abs(f) <= kRootEps * fscale) {
            out.lambda = lambda;
            out.iterations = it;
            return out;
        }
        const double fp = eval_secular_derivative(lambda, s);
        const double mu = lambda - f / fp;
        const double next = (mu > phi_max) ? mu : 0.5 * (phi_max + lambda);
        if (next == lambda) { // step below representable resolution
            out.lambda = lambda;
            out.iterations = it;
            return out;
        }
        lambda = next;
    }
    throw MaxIterationsExceeded("solve_secular: no convergence after " +
                                std::to_string(kMaxNewtonIterations) + " protected Newton steps");
}

Solution solve_canonical(const Canonical& c) {
    const std::size_t n = c.v.size();
    Solution sol;

    const linalg::EigenDecomposition eig = linalg::eigh(c.u);
    std::vector<double> phi = eig.eigenvalues;
    const double phi_top = phi.empty() ? 0.0 : phi.back();
    if (!phi.empty() && phi.front() < -1e-9 * std::max(phi_top, 1.0))
        throw InvalidInput("lqpqm: C (and hence U) is not positive semi-definite");
    for (double& p : phi) p = std::max(p, 0.0);

    ComplexVector vt = linalg::multiply(eig.eigenvectors.adjoint(), c.v);

    // Support of the secular function; coefficients at round-off level are
    // indistinguishable from zero and would otherwise create phantom poles.
    double coef_max = 0.0;
    for (std::size_t m = 0; m < n; ++m) coef_max = std::max(coef_max, phi[m] * std::norm(vt[m]));
    std::vector<double> phi_s;
    ComplexVector vt_s;
    for (std::size_t m = 0; m < n; ++m) {
        if (phi[m] * std::norm(vt[m]) > kEps * coef_max) {
            phi_s.push_back(phi[m]);
            vt_s.push_back(vt[m]);
        }
    }

    ComplexVector y(n, cdouble{});
    if (phi_s.empty()) {
        // Zero offset (or v in the kernel of U): the solution comes from the
        // top of the spectrum.
        if (c.z >= phi_top) {
            if (c.z <= 0.0)
                throw InvalidInput("lqpqm: log argument vanishes identically (U ~ 0 and z = 0)");
            sol.lambda = c.z;
        } else {
            sol.lambda = phi_top;
            const double scale = std::sqrt((phi_top - c.z) / phi_top);
            for (std::size_t i = 0; i < n; ++i) y[i] = scale * eig.eigenvectors(i, n - 1);
        }
    } else {
        // General case. Solve in a domain rescaled by the largest supported
        // eigenvalue so the inverse-square terms cannot overflow.
        double phi_max = 0.0;
        for (double p : phi_s) phi_max = std::max(phi_max, p);
        std::vector<double> phi_hat(phi_s.size());
        for (std::size_t m = 0; m < phi_s.size(); ++m) phi_hat[m] = phi_s[m] / phi_max;
        const SecularRoot root = solve_secular(phi_hat, vt_s, c.z / phi_max);
        sol.lambda = root.lambda * phi_max;
        sol.newton_iterations = root.iterations;

        ComplexVector w(n);
        for (std::size_t m = 0; m < n; ++m) {
            const cdouble num = phi[m] * vt[m];
            const double den = sol.lambda - phi[m];
            // components outside the support contribute nothing even when
            // lambda grazes their eigenvalue
            if (num == cdouble{} || std::abs(den) <= 1e-14 * sol.lambda)
                w[m] = cdouble{};
            else
                w[m] = num / den;
        }
        y = linalg::multiply(eig.eigenvectors, w);
    }

    sol.y = y;
    sol.q = linalg::solve_lower_triangular(c.chol_factor, y);
    for (std::size_t i = 0; i < n; ++i) sol.q[i] += c.offset[i];
    sol.objective = canonical_objective(c, sol.y);
    return sol;
}

Solution solve(const Problem& p) {
    const Canonical c = to_canonical(p);
    Solution sol = solve_canonical(c);
    sol.objective = objective(p, sol.q);
    return sol;
}

} // namespace iva::lqpqm
