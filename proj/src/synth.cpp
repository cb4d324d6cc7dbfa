#include "iva/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "iva/kernels.hpp"
#include "iva/metrics.hpp"
#include "iva/parallel.hpp"
#include "iva/report.hpp"

namespace iva::synth {

using report::format_double;

ComplexMatrix random_hermitian_pd(std::size_t m, Rng& rng) {
    // real and imaginary parts each unit variance
    ComplexMatrix x(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double re = rng.normal();
            const double im = rng.normal();
            x(i, j) = cdouble(re, im);
        }
    const ComplexMatrix h = linalg::symmetrize(x);
    linalg::EigenDecomposition dec = linalg::eigh(h);
    for (double& phi : dec.eigenvalues) phi = std::max(std::abs(phi), 1e-6);
    // rebuild Sigma Phi Sigma^H with the positivized spectrum
    ComplexMatrix scaled = dec.eigenvectors;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) scaled(i, j) *= dec.eigenvalues[j];
    return linalg::symmetrize(multiply(scaled, dec.eigenvectors.adjoint()));
}

linalg::ComplexVector sample_laplace_scv(std::size_t f, Rng& rng) {
    linalg::ComplexVector v(f);
    for (cdouble& c : v) c = rng.complex_normal();
    const double z = rng.gamma_integer_shape(static_cast<int>(2 * f));
    double nrm = linalg::norm(v);
    if (nrm == 0.0) { // vanishing direction has probability zero, keep it total
        v[0] = 1.0;
        nrm = 1.0;
    }
    const double scale = z / nrm;
    for (cdouble& c : v) c *= scale;
    return v;
}

SyntheticGroundTruth make_synthetic_mixture(std::size_t f, std::size_t m, std::size_t n, Rng& rng) {
    SyntheticGroundTruth truth;
    truth.sources = MixtureTensor(f, m, n);
    truth.observations = MixtureTensor(f, m, n);
    truth.mixing.reserve(f);
    for (std::size_t fi = 0; fi < f; ++fi) {
        ComplexMatrix a(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) a(i, j) = rng.complex_normal();
        truth.mixing.push_back(std::move(a));
    }
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t t = 0; t < n; ++t) {
            const linalg::ComplexVector scv = sample_laplace_scv(f, rng);
            for (std::size_t fi = 0; fi < f; ++fi) truth.sources.at(fi, k, t) = scv[fi];
        }
    }
    for (std::size_t fi = 0; fi < f; ++fi) {
        const ComplexMatrix& a = truth.mixing[fi];
        for (std::size_t t = 0; t < n; ++t) {
            const cdouble* s = truth.sources.frame(fi, t);
            cdouble* x = truth.observations.frame(fi, t);
            for (std::size_t i = 0; i < m; ++i) {
                cdouble acc{};
                for (std::size_t j = 0; j < m; ++j) acc += a(i, j) * s[j];
                x[i] = acc;
            }
        }
    }
    return truth;
}

std::vector<ComplexMatrix> pca_matrices(const MixtureTensor& x, unsigned threads) {
    const std::size_t fdim = x.F, m = x.M, n = x.N;
    if (n <= m) throw InvalidInput("pca_init: need more frames than channels");
    std::vector<ComplexMatrix> w(fdim);
    std::vector<double> unit(n, 1.0 / static_cast<double>(n));
    parallel_for(fdim, threads, [&](std::size_t f) {
        ComplexMatrix cov(m, m);
        kernels::active().weighted_outer_acc(cov.data(), x.frame(f, 0), unit.data(), m, n);
        const linalg::EigenDecomposition dec = linalg::eigh(linalg::symmetrize(cov));
        const double top = dec.eigenvalues.back();
        if (!(dec.eigenvalues.front() > 1e-12 * std::max(top, 1e-300)))
            throw Singular("pca_init: sample covariance is rank deficient");
        ComplexMatrix wf = dec.eigenvectors.adjoint();
        for (std::size_t i = 0; i < m; ++i) {
            const double scale = 1.0 / std::sqrt(dec.eigenvalues[i]);
            for (std::size_t j = 0; j < m; ++j) wf(i, j) *= scale;
        }
        w[f] = std::move(wf);
    });
    return w;
}

auxiva::DemixingState pca_init(const MixtureTensor& x, unsigned threads) {
    return auxiva::make_state(x, pca_matrices(x, threads), threads);
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int iterations_to_convergence(std::span<const double> trace, double tol) {
    int last = 0;
    for (std::size_t t = 1; t < trace.size(); ++t)
        if (std::abs(trace[t] - trace[t - 1]) >= tol) last = static_cast<int>(t);
    return last == 0 ? 0 : last + 1;
}

CampaignConfig parse_campaign_config(std::istream& is) {
    CampaignConfig cfg;
    cfg.rules.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "M") cfg.M = std::stoul(value);
            else if (key == "F") cfg.F = std::stoul(value);
            else if (key == "N") cfg.N = std::stoul(value);
            else if (key == "trials") cfg.trials = std::stoul(value);
            else if (key == "iterations") cfg.iterations = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "out_path") cfg.out_path = value;
            else if (key == "rules") {
                std::stringstream ss(value);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    cfg.rules.push_back(auxiva::rule_from_name(trim(tok)));
            } else {
                throw InvalidInput("config line " + std::to_string(lineno) + ": unknown key " + key);
            }
        } catch (const std::logic_error&) {
            throw InvalidInput("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    return cfg;
}

namespace {

struct TraceRow {
    int iteration;
    std::string iva_cost;
    std::string surrogate;
    std::string residual;
    std::string isr;
};

void append_trace(std::string& csv, std::size_t trial, const std::string& rule,
                  const std::vector<TraceRow>& rows) {
    for (const TraceRow& r : rows) {
        csv += std::to_string(trial);
        csv += ',';
        csv += rule;
        csv += ',';
        csv += std::to_string(r.iteration);
        csv += ',';
        csv += r.iva_cost;
        csv += ',';
        csv += r.surrogate;
        csv += ',';
        csv += r.residual;
        csv += ',';
        csv += r.isr;
        csv += '\n';
    }
}

std::string cell(double v) {
    return std::isnan(v) ? std::string{} : format_double(v);
}

std::string summary_row(const CampaignConfig& cfg, const RuleSummary& s, bool with_fn,
                        std::size_t used_trials) {
    std::string row = auxiva::rule_name(s.rule);
    row += ',' + std::to_string(cfg.M) + ',';
    row += with_fn ? std::to_string(cfg.F) : std::string{};
    row += ',';
    row += with_fn ? std::to_string(cfg.N) : std::string{};
    row += ',' + std::to_string(used_trials) + ',';
    row += cell(s.ratio1_median) + ',';
    row += cell(s.ratio2_median) + ',';
    row += cell(s.iters_cost_median) + ',';
    row += cell(s.iters_isr_median) + ',';
    row += cell(s.success_rate) + ',';
    row += cell(s.final_residual_median) + ',';
    row += cell(s.final_isr_db_median) + '\n';
    return row;
}

} // namespace

CampaignResult run_sedjoco_campaign(const CampaignConfig& config) {
    const std::size_t m = config.M;
    const std::size_t trials = config.trials;
    const int iters = config.iterations;
    if (config.rules.empty()) throw InvalidInput("campaign: no update rules given");

    struct TrialData {
        // per rule: surrogate and residual traces (iteration 0 .. iters)
        std::vector<std::vector<double>> surrogate;
        std::vector<std::vector<double>> residual;
        std::string error;
    };
    std::vector<TrialData> data(trials);

    parallel_for(trials, config.threads, [&](std::size_t trial) {
        TrialData& td = data[trial];
        try {
            Rng rng = Rng::derive(config.seed, trial);
            std::vector<ComplexMatrix> v;
            v.reserve(m);
            for (std::size_t k = 0; k < m; ++k) v.push_back(random_hermitian_pd(m, rng));

            td.surrogate.resize(config.rules.size());
            td.residual.resize(config.rules.size());
            for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
                ComplexMatrix w = ComplexMatrix::identity(m);
                td.surrogate[ri].push_back(auxiva::surrogate_cost_single(w, v));
                td.residual[ri].push_back(metrics::sedjoco_residual(w, v));
                for (int it = 1; it <= iters; ++it) {
                    auxiva::apply_update(config.rules[ri], w, v);
                    td.surrogate[ri].push_back(auxiva::surrogate_cost_single(w, v));
                    td.residual[ri].push_back(metrics::sedjoco_residual(w, v));
                }
            }
        } catch (const std::exception& e) {
            td.error = e.what();
        }
    });

    CampaignResult out;
    out.trace_csv = std::string(kTraceCsvHeader) + "\n";
    std::size_t usable = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        if (!data[trial].error.empty()) {
            out.trial_errors.push_back("trial " + std::to_string(trial) + ": " + data[trial].error);
            continue;
        }
        ++usable;
        for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
            std::vector<TraceRow> rows;
            for (int it = 0; it <= iters; ++it)
                rows.push_back(TraceRow{it, "", format_double(data[trial].surrogate[ri][it]),
                                        format_double(data[trial].residual[ri][it]), ""});
            append_trace(out.trace_csv, trial, auxiva::rule_name(config.rules[ri]), rows);
        }
    }

    // decrease ratios are measured against the ipa rule on the same problem
    std::ptrdiff_t ipa_index = -1;
    for (std::size_t ri = 0; ri < config.rules.size(); ++ri)
        if (config.rules[ri] == UpdateRule::ipa) ipa_index = static_cast<std::ptrdiff_t>(ri);

    out.summary_csv = std::string(kSummaryCsvHeader) + "\n";
    for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
        std::vector<double> ratio1, ratio2, final_residual;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const TrialData& td = data[trial];
            if (!td.error.empty()) continue;
            final_residual.push_back(td.residual[ri].back());
            if (ipa_index >= 0 && iters >= 1) {
                const auto& mine = td.surrogate[ri];
                const auto& ref = td.surrogate[static_cast<std::size_t>(ipa_index)];
                const double ref_d1 = ref[0] - ref[1];
                if (ref_d1 > 0.0) ratio1.push_back((mine[0] - mine[1]) / ref_d1);
                if (iters >= 2) {
                    // cumulative decrease over the first two iterations
                    const double ref_d2 = ref[0] - ref[2];
                    if (ref_d2 > 0.0) ratio2.push_back((mine[0] - mine[2]) / ref_d2);
                }
            }
        }
        RuleSummary s;
        s.rule = config.rules[ri];
        if (!ratio1.empty()) s.ratio1_median = median(ratio1);
        if (!ratio2.empty()) s.ratio2_median = median(ratio2);
        s.final_residual_median = median(final_residual);
        out.summaries.push_back(s);
        out.summary_csv += summary_row(config, s, /*with_fn=*/false, usable);
    }
    return out;
}

CampaignResult run_synthetic_campaign(const CampaignConfig& config) {
    const std::size_t trials = config.trials;
    if (config.rules.empty()) throw InvalidInput("campaign: no update rules given");

    struct TrialData {
        std::vector<std::vector<double>> cost;   // per rule
        std::vector<std::vector<double>> isr_db; // per rule
        std::vector<std::vector<double>> surrogate;
        std::string error;
    };
    std::vector<TrialData> data(trials);

    parallel_for(trials, config.threads, [&](std::size_t trial) {
        TrialData& td = data[trial];
        try {
            Rng rng = Rng::derive(config.seed, trial);
            const SyntheticGroundTruth truth =
                make_synthetic_mixture(config.F, config.M, config.N, rng);
            const std::vector<ComplexMatrix> w0 = pca_matrices(truth.observations);
            const contrast::ContrastModel model = contrast::laplace();

            td.cost.resize(config.rules.size());
            td.isr_db.resize(config.rules.size());
            td.surrogate.resize(config.rules.size());
            for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
                auxiva::RunOptions opts;
                opts.iterations = config.iterations;
                opts.threads = 1; // trials already run in parallel
                opts.true_mixing = &truth.mixing;
                opts.stable_stop = config.stable_stop;
                opts.stable_cost_tol = config.cost_conv_tol;
                opts.stable_isr_tol_db = config.isr_conv_tol_db;
                auxiva::RunResult res =
                    auxiva::run(truth.observations, config.rules[ri], model,
                                auxiva::make_state(truth.observations, w0), opts);
                for (const report::IterationRecord& rec : res.report.records) {
                    td.cost[ri].push_back(rec.iva_cost);
                    td.surrogate[ri].push_back(rec.surrogate_cost);
                    td.isr_db[ri].push_back(rec.isr_db.value_or(0.0));
                }
            }
        } catch (const std::exception& e) {
            td.error = e.what();
        }
    });

    CampaignResult out;
    out.trace_csv = std::string(kTraceCsvHeader) + "\n";
    std::size_t usable = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        if (!data[trial].error.empty()) {
            out.trial_errors.push_back("trial " + std::to_string(trial) + ": " + data[trial].error);
            continue;
        }
        ++usable;
        for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
            std::vector<TraceRow> rows;
            const TrialData& td = data[trial];
            for (std::size_t it = 0; it < td.cost[ri].size(); ++it)
                rows.push_back(TraceRow{static_cast<int>(it), format_double(td.cost[ri][it]),
                                        format_double(td.surrogate[ri][it]), "",
                                        format_double(td.isr_db[ri][it])});
            append_trace(out.trace_csv, trial, auxiva::rule_name(config.rules[ri]), rows);
        }
    }

    out.summary_csv = std::string(kSummaryCsvHeader) + "\n";
    for (std::size_t ri = 0; ri < config.rules.size(); ++ri) {
        std::vector<double> conv_cost, conv_isr, finals;
        std::size_t successes = 0;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const TrialData& td = data[trial];
            if (!td.error.empty()) continue;
            conv_cost.push_back(iterations_to_convergence(td.cost[ri], config.cost_conv_tol));
            conv_isr.push_back(iterations_to_convergence(td.isr_db[ri], config.isr_conv_tol_db));
            finals.push_back(td.isr_db[ri].back());
            if (td.isr_db[ri].back() < -10.0) ++successes;
        }
        RuleSummary s;
        s.rule = config.rules[ri];
        s.iters_cost_median = median(conv_cost);
        s.iters_isr_median = median(conv_isr);
        s.success_rate = usable == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(usable);
        s.final_isr_db_median = median(finals);
        out.summaries.push_back(s);
        out.summary_csv += summary_row(config, s, /*with_fn=*/true, usable);
    }
    return out;
}

} // namespace iva::synth
