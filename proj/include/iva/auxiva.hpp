#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iva/contrast.hpp"
#include "iva/linalg.hpp"
#include "iva/lqpqm.hpp"
#include "iva/report.hpp"

namespace iva::auxiva {

using linalg::cdouble;
using linalg::ComplexMatrix;
using linalg::ComplexVector;

// Observations x_fn, an F x M x N complex array stored frame-contiguously:
// element (f, n, m) sits at data[(f * N + n) * M + m], so each frame is an
// M-vector the kernels can stream over.
struct MixtureTensor {
    std::size_t F = 0, M = 0, N = 0;
    std::vector<cdouble> data;

    MixtureTensor() = default;
    MixtureTensor(std::size_t f, std::size_t m, std::size_t n)
        : F(f), M(m), N(n), data(f * m * n) {}

    cdouble* frame(std::size_t f, std::size_t n) { return data.data() + (f * N + n) * M; }
    const cdouble* frame(std::size_t f, std::size_t n) const { return data.data() + (f * N + n) * M; }
    cdouble& at(std::size_t f, std::size_t m, std::size_t n) { return data[(f * N + n) * M + m]; }
    const cdouble& at(std::size_t f, std::size_t m, std::size_t n) const {
        return data[(f * N + n) * M + m];
    }
    bool all_finite() const;
};

// Demixing matrices plus everything the outer loop refreshes each iteration.
struct DemixingState {
    std::size_t F = 0, M = 0, N = 0;
    std::vector<ComplexMatrix> W; // one M x M matrix per mixture
    std::vector<cdouble> s_hat;   // estimates, same layout as MixtureTensor
    std::vector<double> r;        // auxiliary magnitudes, r[k * N + n]
    std::vector<ComplexMatrix> V; // weighted covariances, frequency-major: V[f * M + k]

    double& r_at(std::size_t k, std::size_t n) { return r[k * N + n]; }
    ComplexMatrix& v_at(std::size_t k, std::size_t f) { return V[f * M + k]; }
    const ComplexMatrix& v_at(std::size_t k, std::size_t f) const { return V[f * M + k]; }
    std::span<const ComplexMatrix> v_slice(std::size_t f) const { return {V.data() + f * M, M}; }
};

enum class UpdateRule { ip, ip2, iss, ipa, sedjoco };

UpdateRule rule_from_name(const std::string& name);
std::string rule_name(UpdateRule rule);

// Builds a state from initial demixing matrices; estimates are refreshed,
// covariances are left empty until the first iteration.
DemixingState make_state(const MixtureTensor& x, std::vector<ComplexMatrix> w, unsigned threads = 1);
std::vector<ComplexMatrix> identity_matrices(std::size_t f, std::size_t m);

// s_hat <- W x for every mixture and frame.
void refresh_estimates(DemixingState& state, const MixtureTensor& x, unsigned threads = 1);
// r_kn <- sqrt( sum_f |s_hat_kfn|^2 )
void refresh_auxiliary(DemixingState& state);
// V_kf <- (1/N) sum_n weight(r_kn) x_fn x_fn^H, stored frequency-major
void compute_weighted_covariances(const MixtureTensor& x, const std::vector<double>& r,
                                  const contrast::ContrastModel& model,
                                  std::vector<ComplexMatrix>& v, std::size_t m, unsigned threads = 1);

// Surrogate of the negative log-likelihood:
//   sum_{kf} w_kf^H V_kf w_kf - 2 sum_f log |det W_f|
// v_by_fk is frequency-major like DemixingState::V.
double surrogate_cost(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> v_by_fk);
// Single-mixture version, v holds V_1 .. V_M for that mixture.
double surrogate_cost_single(const ComplexMatrix& w, std::span<const ComplexMatrix> v);

// Negative log-likelihood sum_kn G(r_kn) - 2 N sum_f log |det W_f| with the
// auxiliary magnitudes recomputed from the current estimates. Throws
// Singular when a determinant underflows.
double evaluate_iva_cost(const DemixingState& state, const contrast::ContrastModel& model);

// One sweep of each update rule over a single mixture. v spans V_1 .. V_M
// for that mixture; W is modified in place. Every rule leaves the surrogate
// no larger than it found it.
void update_ip(ComplexMatrix& w, std::span<const ComplexMatrix> v);
void update_ip2(ComplexMatrix& w, std::span<const ComplexMatrix> v);
void update_iss(ComplexMatrix& w, std::span<const ComplexMatrix> v);
void update_ipa(ComplexMatrix& w, std::span<const ComplexMatrix> v);

struct SedjocoResult {
    int sweeps = 0;
    double residual = 0.0;
};

// Rank-2 sweeps repeated until the joint congruence residual drops below
// tol (or the sweep budget runs out; the caller inspects the result).
SedjocoResult update_sedjoco(ComplexMatrix& w, std::span<const ComplexMatrix> v,
                             double tol = 1e-20, int max_sweeps = 1000);

void apply_update(UpdateRule rule, ComplexMatrix& w, std::span<const ComplexMatrix> v);

struct RunOptions {
    int iterations = 100;
    unsigned threads = 1;
    // stop once the per-iteration cost decrease falls below this value
    std::optional<double> early_stop_cost_decrease;
    // ground-truth mixing matrices; enables the per-iteration ISR column
    const std::vector<ComplexMatrix>* true_mixing = nullptr;
    // stop after the cost change (and ISR change, when tracked) stayed below
    // the tolerances for this many consecutive iterations; 0 disables
    int stable_stop = 0;
    double stable_cost_tol = 1e-3;
    double stable_isr_tol_db = 0.1;
};

struct RunResult {
    DemixingState state;
    report::SeparationReport report;
};

// The outer majorization-minimization loop: refresh auxiliary magnitudes and
// weighted covariances, update every mixture's demixing matrix with the
// chosen rule, re-estimate the sources, and log the cost trace. Record t
// describes the state after t iterations (record 0 is the initial point).
RunResult run(const MixtureTensor& x, UpdateRule rule, const contrast::ContrastModel& model,
              DemixingState init, const RunOptions& options);

namespace detail {

// The per-source pieces of the rank-2 update, exposed for the consistency
// tests: the quadratic coefficients, the log-penalized problem handed to the
// global solver, and the transformed covariance it was built from.
struct IpaSubproblem {
    lqpqm::Problem problem;
    ComplexMatrix sigma;     // W V_k W^H
    ComplexMatrix sigma_inv; // (W V_k W^H)^{-1}
};

IpaSubproblem build_ipa_subproblem(const ComplexMatrix& w, std::span<const ComplexMatrix> v,
                                   std::size_t k);

// T_k(u, q) = I + e_k (u - e_k)^H + Ebar_k q^* e_k^T
ComplexMatrix ipa_transform(std::span<const cdouble> u, std::span<const cdouble> q, std::size_t k,
                            std::size_t m);

} // namespace detail

} // namespace iva::auxiva
