#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "iva/auxiva.hpp"
#include "iva/rng.hpp"

namespace iva::synth {

using auxiva::MixtureTensor;
using auxiva::UpdateRule;
using linalg::cdouble;
using linalg::ComplexMatrix;

// Random Hermitian matrix whose coefficients have unit-variance normal real
// and imaginary parts, symmetrized and made positive definite by replacing
// each eigenvalue with max(|eigenvalue|, 1e-6).
ComplexMatrix random_hermitian_pd(std::size_t m, Rng& rng);

// Spherically symmetric complex Laplace sample over F parallel mixtures:
// z * v / ||v|| with v ~ CN(0, I_F) and z ~ Gamma(2F, 1).
linalg::ComplexVector sample_laplace_scv(std::size_t f, Rng& rng);

struct SyntheticGroundTruth {
    MixtureTensor sources;              // F x M x N
    std::vector<ComplexMatrix> mixing;  // A_f
    MixtureTensor observations;         // x_fn = A_f s_fn, exact
};

// Laplace sources, standard complex normal mixing, exact mixture.
SyntheticGroundTruth make_synthetic_mixture(std::size_t f, std::size_t m, std::size_t n, Rng& rng);

// Whitening initialization: W_f = Lambda^{-1/2} E^H from the
// eigendecomposition of the per-mixture sample covariance. The whitened
// output has identity sample covariance. Throws Singular on rank-deficient
// covariance.
std::vector<ComplexMatrix> pca_matrices(const MixtureTensor& x, unsigned threads = 1);
auxiva::DemixingState pca_init(const MixtureTensor& x, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Benchmark campaigns
// ---------------------------------------------------------------------------

struct CampaignConfig {
    std::size_t M = 4;
    std::size_t F = 6;
    std::size_t N = 5000;
    std::size_t trials = 100;
    int iterations = 100;
    std::vector<UpdateRule> rules;
    std::uint64_t seed = 0;
    std::string out_path;
    unsigned threads = 1;
    // synthetic campaign only: stop a trial after both convergence criteria
    // stayed below threshold for this many consecutive iterations (0 = never)
    int stable_stop = 100;
    // Tabled convergence criteria: iteration counts until the per-iteration
    // cost / ISR changes drop below these for good.
    double cost_conv_tol = 1e-3;
    double isr_conv_tol_db = 0.1;
};

// Plain-text key = value file; keys M, F, N, trials, iterations, rules,
// seed, out_path (comments start with '#'). Unknown keys are rejected.
CampaignConfig parse_campaign_config(std::istream& is);

// Per-rule aggregate statistics; quantities that do not apply to a campaign
// type are NaN and render as empty CSV cells.
struct RuleSummary {
    UpdateRule rule = UpdateRule::ipa;
    double ratio1_median = std::numeric_limits<double>::quiet_NaN();
    double ratio2_median = std::numeric_limits<double>::quiet_NaN();
    double iters_cost_median = std::numeric_limits<double>::quiet_NaN();
    double iters_isr_median = std::numeric_limits<double>::quiet_NaN();
    double success_rate = std::numeric_limits<double>::quiet_NaN();
    double final_residual_median = std::numeric_limits<double>::quiet_NaN();
    double final_isr_db_median = std::numeric_limits<double>::quiet_NaN();
};

struct CampaignResult {
    std::string trace_csv;   // trial,rule,iteration,iva_cost,surrogate_cost,sedjoco_residual,isr_db
    std::string summary_csv; // one row per rule
    std::vector<RuleSummary> summaries;
    // failed trials are excluded from traces and statistics; one message per
    // failure ("trial 17: ...")
    std::vector<std::string> trial_errors;
};

inline constexpr const char* kTraceCsvHeader =
    "trial,rule,iteration,iva_cost,surrogate_cost,sedjoco_residual,isr_db";
inline constexpr const char* kSummaryCsvHeader =
    "rule,M,F,N,trials,decrease_ratio_iter1_median,decrease_ratio_iter2_median,"
    "iters_to_cost_conv_median,iters_to_isr_conv_median,success_rate,"
    "final_residual_median,final_isr_db_median";

// Fixed random joint-congruence problems: M random Hermitian PD matrices per
// trial, every rule started from W = I, per-iteration surrogate and residual
// traces. The summary carries the per-rule first/second iteration surrogate
// decrease as a fraction of what the ipa rule achieved on the same problem
// (those columns are empty unless ipa is among the rules).
CampaignResult run_sedjoco_campaign(const CampaignConfig& config);

// Synthetic Laplace mixtures separated from a whitening start; per-iteration
// cost and ISR traces against the true mixing, plus iterations-to-convergence
// and success statistics.
CampaignResult run_synthetic_campaign(const CampaignConfig& config);

// Iterations until the per-iteration change stays below tol: 1 + the last
// index t >= 1 with |trace[t] - trace[t-1]| >= tol, or 0 when the trace
// never moves that much.
int iterations_to_convergence(std::span<const double> trace, double tol);

double median(std::vector<double> values);

} // namespace iva::synth
