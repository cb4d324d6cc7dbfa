#pragma once

#include <optional>
#include <span>
#include <vector>

#include "iva/linalg.hpp"

namespace iva::metrics {

using linalg::cdouble;
using linalg::ComplexMatrix;

// dB values are clipped to [-200, 200] to keep reports finite.
inline constexpr double kDbCap = 200.0;

double to_db(double linear_ratio);

// || W [V_1 w_1 ... V_M w_M] - I ||_F^2, the stationarity residual of the
// surrogate minimization. Zero exactly at a solution of the joint congruence
// system.
double sedjoco_residual(const ComplexMatrix& w, std::span<const ComplexMatrix> v);

// Interference-to-signal ratio of the demixing/mixing product, minimized
// over source permutations (exhaustive, M <= 8). Returns the linear ratio;
// convert with to_db at the reporting boundary. A permutation whose target
// coefficient is exactly zero is skipped; if every permutation is skipped
// the result is +inf.
double isr(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> a);
double isr_db(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> a);

// Scale-invariant signal-to-distortion ratio in dB, capped at +-200.
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

// Scale-invariant signal-to-interference ratio in dB for source
// `target_index`, using all rows of `references` to model the interference
// subspace. Throws DegenerateReference when the reference Gram matrix is
// singular.
double si_sir(std::span<const std::vector<double>> references, std::span<const double> estimate,
              std::size_t target_index);

struct PermutationMetrics {
    std::vector<std::size_t> permutation; // estimates[permutation[k]] matches references[k]
    std::vector<double> si_sdr_db;        // per reference source
    std::vector<double> si_sir_db;
    std::vector<double> delta_si_sdr_db;  // present when a mixture signal was given
    std::vector<double> delta_si_sir_db;
};

// Evaluates both metrics under the permutation that maximizes the total
// SI-SIR (exhaustive search over M! orderings, M <= 8). When `mixture` is
// non-null, also reports the improvement over scoring the raw mixture
// signal against each reference.
PermutationMetrics best_permutation_metrics(std::span<const std::vector<double>> references,
                                            std::span<const std::vector<double>> estimates,
                                            const std::vector<double>* mixture = nullptr);

} // namespace iva::metrics
