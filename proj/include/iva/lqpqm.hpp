#pragma once

#include <span>

#include "iva/linalg.hpp"

namespace iva::lqpqm {

using linalg::cdouble;
using linalg::ComplexMatrix;
using linalg::ComplexVector;

// Minimize over complex q:
//
//   (q - b)^H A (q - b) - log( (q - d)^H C (q - d) + z )
//
// with A Hermitian positive definite, C Hermitian positive semi-definite and
// z >= 0. Despite being non-convex, the global minimum can be computed
// exactly: after a change of variables the stationary points are the zeros
// of a univariate secular function, and the largest zero is the global
// minimizer.
struct Problem {
    ComplexMatrix a;
    ComplexVector b;
    ComplexMatrix c;
    ComplexVector d;
    double z = 0.0;

    Problem(ComplexMatrix a_, ComplexVector b_, ComplexMatrix c_, ComplexVector d_, double z_);
    std::size_t dim() const { return b.size(); }
};

// The reduced form  min_y  y^H y - log( (y + v)^H U (y + v) + z )
// obtained through y = G (q - b) with A = G^H G, U = G^{-H} C G^{-1} and
// v = G (b - d). Minimizers map back through q = G^{-1} y + b.
struct Canonical {
    ComplexMatrix u;
    ComplexVector v;
    double z = 0.0;
    ComplexMatrix chol_factor; // G
    ComplexVector offset;      // b of the original problem
};

struct Solution {
    ComplexVector q;
    ComplexVector y;
    double lambda = 0.0;
    double objective = 0.0;
    int newton_iterations = 0;
};

Canonical to_canonical(const Problem& p);

// Direct evaluation of the two objective forms; used by the solver to report
// the attained value and by tests as an oracle.
double objective(const Problem& p, std::span<const cdouble> q);
double canonical_objective(const Canonical& c, std::span<const cdouble> y);

// The secular function whose largest zero carries the global minimum,
//
//   f(lambda) = lambda^2 sum_{m in S} phi_m |vt_m|^2 / (lambda - phi_m)^2
//               - lambda + z,
//
// summed over the support S = { m : phi_m |vt_m|^2 != 0 }. Throws
// PoleEvaluation when lambda is within 1e-14 * phi_max of a supported pole.
double secular(double lambda, std::span<const double> phi, std::span<const cdouble> v_tilde, double z);
double secular_derivative(double lambda, std::span<const double> phi,
                          std::span<const cdouble> v_tilde, double z);

// Objective value at the stationary point associated with multiplier lambda.
// Monotonically non-increasing over the ascending zeros of the secular
// function, which is why the largest zero is the global minimum.
double stationary_objective(double lambda, std::span<const double> phi,
                            std::span<const cdouble> v_tilde, double z);

// Largest real root of
//   -x^3 + (phi_max vmax_sq + 2 phi_max + z) x^2
//        - (phi_max + 2 z) phi_max x + phi_max^2 z = 0,
// the single-pole approximation of the secular equation. Used to initialize
// the Newton iteration; the caller clamps the result to >= z.
double init_cubic_poly(double phi_max, double vmax_sq, double z);

struct SecularRoot {
    double lambda = 0.0;
    int iterations = 0;
};

inline constexpr double kRootEps = 1e-12;
inline constexpr int kMaxNewtonIterations = 100;

// Largest root of the secular function, found by Newton-Raphson protected by
// bisection against the leftmost admissible point. Requires a nonempty
// support; the root lies in (max(phi_max, z), +inf) where f is strictly
// decreasing. Throws MaxIterationsExceeded on numerically hostile input.
SecularRoot solve_secular(std::span<const double> phi, std::span<const cdouble> v_tilde, double z);

// Global minimizer. Handles the zero-offset special case (v = 0, or support
// empty) through the eigendecomposition of U, and the general case through
// the secular equation solved in a rescaled domain where the largest
// supported eigenvalue is 1.
Solution solve(const Problem& p);

// Same entry point for callers that already hold the reduced form.
Solution solve_canonical(const Canonical& c);

} // namespace iva::lqpqm
