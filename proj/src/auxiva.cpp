#include "iva/auxiva.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iva/kernels.hpp"
#include "iva/metrics.hpp"
#include "iva/parallel.hpp"

namespace iva::auxiva {

bool MixtureTensor::all_finite() const {
    for (const cdouble& v : data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

UpdateRule rule_from_name(const std::string& name) {
    if (name == "ip") return UpdateRule::ip;
    if (name == "ip2") return UpdateRule::ip2;
    if (name == "iss") return UpdateRule::iss;
    if (name == "ipa") return UpdateRule::ipa;
    if (name == "sedjoco") return UpdateRule::sedjoco;
    throw InvalidInput("unknown update rule: " + name);
}

std::string rule_name(UpdateRule rule) {
    switch (rule) {
        case UpdateRule::ip: return "ip";
        case UpdateRule::ip2: return "ip2";
        case UpdateRule::iss: return "iss";
        case UpdateRule::ipa: return "ipa";
        case UpdateRule::sedjoco: return "sedjoco";
    }
    return "?";
}

std::vector<ComplexMatrix> identity_matrices(std::size_t f, std::size_t m) {
    return std::vector<ComplexMatrix>(f, ComplexMatrix::identity(m));
}

DemixingState make_state(const MixtureTensor& x, std::vector<ComplexMatrix> w, unsigned threads) {
    if (w.size() != x.F) throw InvalidInput("make_state: one demixing matrix per mixture required");
    for (const ComplexMatrix& wf : w)
        if (wf.rows() != x.M || wf.cols() != x.M) throw InvalidInput("make_state: W shape mismatch");
    DemixingState state;
    state.F = x.F;
    state.M = x.M;
    state.N = x.N;
    state.W = std::move(w);
    state.s_hat.resize(x.data.size());
    state.r.assign(x.M * x.N, 0.0);
    refresh_estimates(state, x, threads);
    refresh_auxiliary(state);
    return state;
}

void refresh_estimates(DemixingState& state, const MixtureTensor& x, unsigned threads) {
    const auto& ops = kernels::active();
    parallel_for(state.F, threads, [&](std::size_t f) {
        ops.matvec_frames(state.s_hat.data() + (f * state.N) * state.M, state.W[f].data(),
                          x.frame(f, 0), state.M, state.N);
    });
}

namespace {

void scv_norms(const std::vector<cdouble>& s_hat, std::size_t fdim, std::size_t m, std::size_t n,
               std::vector<double>& r) {
    r.assign(m * n, 0.0);
    for (std::size_t f = 0; f < fdim; ++f) {
        const cdouble* block = s_hat.data() + (f * n) * m;
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t k = 0; k < m; ++k) r[k * n + t] += std::norm(block[t * m + k]);
    }
    for (double& v : r) v = std::sqrt(v);
}

} // namespace

void refresh_auxiliary(DemixingState& state) {
    scv_norms(state.s_hat, state.F, state.M, state.N, state.r);
}

void compute_weighted_covariances(const MixtureTensor& x, const std::vector<double>& r,
                                  const contrast::ContrastModel& model,
                                  std::vector<ComplexMatrix>& v, std::size_t m, unsigned threads) {
    const std::size_t fdim = x.F, n = x.N;
    v.assign(m * fdim, ComplexMatrix(x.M, x.M));
    // the MM weights only depend on the source, so compute them once per k
    // and fold in the 1/N normalization
    std::vector<double> weights(m * n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t t = 0; t < n; ++t) weights[k * n + t] = model.weight(r[k * n + t]) * inv_n;

    const auto& ops = kernels::active();
    parallel_for(m * fdim, threads, [&](std::size_t idx) {
        const std::size_t f = idx / m;
        const std::size_t k = idx % m;
        ops.weighted_outer_acc(v[f * m + k].data(), x.frame(f, 0), weights.data() + k * n, x.M, n);
    });
}

namespace {

// w_k^H V w_k where row k of W holds the conjugated filter
double row_quadratic_form(const ComplexMatrix& w, const ComplexMatrix& v, std::size_t k) {
    const std::size_t m = w.rows();
    cdouble s{};
    for (std::size_t i = 0; i < m; ++i) {
        cdouble inner{};
        for (std::size_t j = 0; j < m; ++j) inner += v(i, j) * std::conj(w(k, j));
        s += w(k, i) * inner;
    }
    return s.real();
}

ComplexVector row_as_vector(const ComplexMatrix& w, std::size_t k) {
    ComplexVector out(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] = std::conj(w(k, j));
    return out;
}

} // namespace

double surrogate_cost_single(const ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    double quad = 0.0;
    for (std::size_t k = 0; k < w.rows(); ++k) quad += row_quadratic_form(w, v[k], k);
    return quad - 2.0 * linalg::log_abs_det(w);
}

double surrogate_cost(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> v_by_fk) {
    const std::size_t fdim = w.size();
    const std::size_t m = fdim ? w[0].rows() : 0;
    double total = 0.0;
    for (std::size_t f = 0; f < fdim; ++f)
        total += surrogate_cost_single(w[f], v_by_fk.subspan(f * m, m));
    return total;
}

namespace {

double iva_cost_from(const std::vector<double>& r, std::span<const ComplexMatrix> w,
                     const contrast::ContrastModel& model, std::size_t n) {
    double cost = 0.0;
    for (double rv : r) cost += model.g(rv);
    double logdet = 0.0;
    for (const ComplexMatrix& wf : w) logdet += linalg::log_abs_det(wf);
    return cost - 2.0 * static_cast<double>(n) * logdet;
}

} // namespace

double evaluate_iva_cost(const DemixingState& state, const contrast::ContrastModel& model) {
    std::vector<double> r; // recomputed from the current estimates
    scv_norms(state.s_hat, state.F, state.M, state.N, r);
    return iva_cost_from(r, state.W, model, state.N);
}

void update_ip(ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    const std::size_t m = w.rows();
    for (std::size_t k = 0; k < m; ++k) {
        const ComplexMatrix wv = multiply(w, v[k]);
        ComplexVector e(m, cdouble{});
        e[k] = 1.0;
        ComplexVector wk = linalg::solve(wv, e);
        const double denom = linalg::vdot(wk, linalg::multiply(v[k], wk)).real();
        if (!(denom > 0.0)) throw NotPositiveDefinite("ip: non-positive normalization");
        const double scale = 1.0 / std::sqrt(denom);
        for (std::size_t j = 0; j < m; ++j) w(k, j) = std::conj(wk[j] * scale);
    }
}

void update_iss(ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    const std::size_t m = w.rows();
    for (std::size_t k = 0; k < m; ++k) {
        const ComplexVector wk = row_as_vector(w, k);
        ComplexVector coeffs(m);
        for (std::size_t u = 0; u < m; ++u) {
            const ComplexVector t = linalg::multiply(v[u], wk);
            const double den = linalg::vdot(wk, t).real();
            if (!(den >= 1e-300))
                throw DegenerateDenominator("iss: w_k^H V w_k vanished for source " + std::to_string(u));
            if (u == k) {
                coeffs[u] = 1.0 - 1.0 / std::sqrt(den);
            } else {
                const ComplexVector wu = row_as_vector(w, u);
                coeffs[u] = linalg::vdot(wu, t) / den; // w_u^H V_u w_k / den
            }
        }
        // W <- W - v_k w_k^H, with w_k^H being the current row k
        const ComplexVector old_row(w.row(k), w.row(k) + m);
        for (std::size_t u = 0; u < m; ++u)
            for (std::size_t j = 0; j < m; ++j) w(u, j) -= coeffs[u] * old_row[j];
    }
}

void update_ip2(ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    const std::size_t m = w.rows();
    if (m < 2) {
        update_ip(w, v);
        return;
    }
    // Pair schedule k = 2k' mod M, m = 2k'+1 mod M (1-based, 0 wraps to M).
    // For even M the index formula revisits each pair twice per sweep, so a
    // pair is only updated the first time it appears; odd M produces M
    // distinct pairs and each source is touched twice.
    std::vector<bool> seen(m * m, false);
    for (std::size_t kp = 1; kp <= m; ++kp) {
        std::size_t k1 = (2 * kp) % m;
        std::size_t m1 = (2 * kp + 1) % m;
        if (k1 == 0) k1 = m;
        if (m1 == 0) m1 = m;
        const std::size_t k = k1 - 1;
        const std::size_t mm = m1 - 1;
        if (k == mm) continue;
        if (seen[k * m + mm]) continue;
        seen[k * m + mm] = true;

        ComplexMatrix basis(m, 2);
        basis(k, 0) = 1.0;
        basis(mm, 1) = 1.0;

        ComplexMatrix p_k = linalg::solve(multiply(w, v[k]), basis);
        ComplexMatrix p_m = linalg::solve(multiply(w, v[mm]), basis);
        const ComplexMatrix vt_k = linalg::symmetrize(multiply(p_k.adjoint(), multiply(v[k], p_k)));
        const ComplexMatrix vt_m = linalg::symmetrize(multiply(p_m.adjoint(), multiply(v[mm], p_m)));

        // ascending eigenvalues: the top eigenvector goes to source k, the
        // bottom one to source m, each normalized in its own metric
        const linalg::EigenDecomposition gev = linalg::generalized_eig(vt_k, vt_m);
        ComplexVector h_k{gev.eigenvectors(0, 1), gev.eigenvectors(1, 1)};
        ComplexVector h_m{gev.eigenvectors(0, 0), gev.eigenvectors(1, 0)};
        const double nk = linalg::vdot(h_k, linalg::multiply(vt_k, h_k)).real();
        const double nm = linalg::vdot(h_m, linalg::multiply(vt_m, h_m)).real();
        if (!(nk > 0.0) || !(nm > 0.0)) throw Singular("ip2: projected normalization vanished");
        for (cdouble& c : h_k) c /= std::sqrt(nk);
        for (cdouble& c : h_m) c /= std::sqrt(nm);

        for (std::size_t i = 0; i < m; ++i) {
            w(k, i) = std::conj(p_k(i, 0) * h_k[0] + p_k(i, 1) * h_k[1]);
            w(mm, i) = std::conj(p_m(i, 0) * h_m[0] + p_m(i, 1) * h_m[1]);
        }
    }
}

namespace detail {

IpaSubproblem build_ipa_subproblem(const ComplexMatrix& w, std::span<const ComplexMatrix> v,
                                   std::size_t k) {
    const std::size_t m = w.rows();
    const std::size_t d = m - 1;
    const ComplexVector wk = row_as_vector(w, k);

    ComplexVector a_diag(d), b_vec(d);
    std::size_t idx = 0;
    for (std::size_t u = 0; u < m; ++u) {
        if (u == k) continue;
        const ComplexVector t = linalg::multiply(v[u], wk);
        const double au = linalg::vdot(wk, t).real();
        if (!(au > 0.0)) throw NotPositiveDefinite("ipa: diagonal quadratic term not positive");
        a_diag[idx] = au;
        b_vec[idx] = linalg::vdot(t, row_as_vector(w, u)); // w_k^H V_u w_u
        ++idx;
    }

    const ComplexMatrix sigma =
        linalg::symmetrize(multiply(w, multiply(v[k], w.adjoint())));
    const ComplexMatrix sigma_inv = linalg::symmetrize(linalg::inverse(sigma));

    // Quadratic pieces of the log penalty, taken from the conjugated inverse.
    ComplexMatrix c(d, d);
    ComplexVector g(d);
    std::size_t row = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == k) continue;
        std::size_t col = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == k) continue;
            c(row, col) = std::conj(sigma_inv(i, j));
            ++col;
        }
        g[row] = std::conj(sigma_inv(i, k));
        ++row;
    }

    const double skk = sigma_inv(k, k).real();
    ComplexVector cg = linalg::solve(c, g);
    double z = skk - linalg::vdot(g, cg).real();
    const double z_tol = 1e-10 * std::max(1.0, std::abs(skk));
    if (z < -z_tol)
        throw NonPositiveZ("ipa: Schur complement z = " + std::to_string(z) + " below round-off");
    z = std::max(z, 0.0);

    ComplexVector b_p1(d);
    for (std::size_t i = 0; i < d; ++i) b_p1[i] = -b_vec[i] / a_diag[i];

    return IpaSubproblem{
        lqpqm::Problem(ComplexMatrix::diagonal(std::span<const cdouble>(a_diag)), std::move(b_p1),
                       std::move(c), std::move(cg), z),
        sigma, sigma_inv};
}

ComplexMatrix ipa_transform(std::span<const cdouble> u, std::span<const cdouble> q, std::size_t k,
                            std::size_t m) {
    ComplexMatrix t = ComplexMatrix::identity(m);
    for (std::size_t j = 0; j < m; ++j) t(k, j) += std::conj(u[j]) - (j == k ? 1.0 : 0.0);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == k) continue;
        t(i, k) += std::conj(q[idx]);
        ++idx;
    }
    return t;
}

} // namespace detail

void update_ipa(ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    const std::size_t m = w.rows();
    for (std::size_t k = 0; k < m; ++k) {
        if (m == 1) {
            const double quad = row_quadratic_form(w, v[0], 0);
            if (!(quad > 0.0)) throw NotPositiveDefinite("ipa: non-positive quadratic form");
            const double scale = 1.0 / std::sqrt(quad);
            for (std::size_t j = 0; j < m; ++j) w(0, j) *= scale;
            continue;
        }

        const detail::IpaSubproblem sub = detail::build_ipa_subproblem(w, v, k);
        const lqpqm::Solution sol = lqpqm::solve(sub.problem);
        if (!(sol.lambda > 0.0)) throw NonPositiveZ("ipa: non-positive multiplier");

        // u = (W V_k W^H)^{-1} (e_k - Ebar_k q^*) / sqrt(lambda)
        ComplexVector qt(m, cdouble{});
        qt[k] = 1.0;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == k) continue;
            qt[i] = -std::conj(sol.q[idx]);
            ++idx;
        }
        ComplexVector u = linalg::multiply(sub.sigma_inv, qt);
        const double inv_sqrt_lambda = 1.0 / std::sqrt(sol.lambda);
        for (cdouble& c : u) c *= inv_sqrt_lambda;

        // W <- T_k(u, q) W without forming T: new row k is u^H W, every other
        // row moves along the old row k
        const ComplexVector old_row_k(w.row(k), w.row(k) + m);
        ComplexVector new_row_k(m, cdouble{});
        for (std::size_t i = 0; i < m; ++i) {
            const cdouble ui = std::conj(u[i]);
            if (ui == cdouble{}) continue;
            for (std::size_t j = 0; j < m; ++j) new_row_k[j] += ui * w(i, j);
        }
        idx = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == k) continue;
            const cdouble qi = std::conj(sol.q[idx]);
            ++idx;
            for (std::size_t j = 0; j < m; ++j) w(i, j) += qi * old_row_k[j];
        }
        for (std::size_t j = 0; j < m; ++j) w(k, j) = new_row_k[j];
    }
}

SedjocoResult update_sedjoco(ComplexMatrix& w, std::span<const ComplexMatrix> v, double tol,
                             int max_sweeps) {
    SedjocoResult out;
    out.residual = metrics::sedjoco_residual(w, v);
    while (out.residual >= tol && out.sweeps < max_sweeps) {
        update_ipa(w, v);
        ++out.sweeps;
        out.residual = metrics::sedjoco_residual(w, v);
    }
    return out;
}

void apply_update(UpdateRule rule, ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    switch (rule) {
        case UpdateRule::ip: update_ip(w, v); break;
        case UpdateRule::ip2: update_ip2(w, v); break;
        case UpdateRule::iss: update_iss(w, v); break;
        case UpdateRule::ipa: update_ipa(w, v); break;
        case UpdateRule::sedjoco: update_sedjoco(w, v); break;
    }
}

RunResult run(const MixtureTensor& x, UpdateRule rule, const contrast::ContrastModel& model,
              DemixingState init, const RunOptions& options) {
    if (!x.all_finite()) throw InvalidInput("run: mixture contains non-finite samples");
    const std::size_t fdim = x.F, m = x.M;

    RunResult result;
    result.state = std::move(init);
    DemixingState& state = result.state;

    double prev_cost = std::numeric_limits<double>::infinity();
    double prev_isr = std::numeric_limits<double>::infinity();
    int stable_count = 0;
    for (int iter = 0; iter <= options.iterations; ++iter) {
        refresh_auxiliary(state);
        compute_weighted_covariances(x, state.r, model, state.V, m, options.threads);

        report::IterationRecord rec;
        rec.iteration = iter;
        rec.iva_cost = iva_cost_from(state.r, state.W, model, state.N);
        rec.surrogate_cost = surrogate_cost(state.W, state.V);
        if (options.true_mixing != nullptr)
            rec.isr_db = metrics::isr_db(state.W, *options.true_mixing);
        result.report.records.push_back(rec);

        if (iter == options.iterations) break;
        if (iter > 0) {
            const double dcost = prev_cost - rec.iva_cost;
            if (options.early_stop_cost_decrease && dcost < *options.early_stop_cost_decrease) break;
            if (options.stable_stop > 0) {
                bool stable = std::abs(dcost) < options.stable_cost_tol;
                if (rec.isr_db)
                    stable = stable && std::abs(prev_isr - *rec.isr_db) < options.stable_isr_tol_db;
                stable_count = stable ? stable_count + 1 : 0;
                if (stable_count >= options.stable_stop) break;
            }
        }
        prev_cost = rec.iva_cost;
        if (rec.isr_db) prev_isr = *rec.isr_db;

        parallel_for(fdim, options.threads, [&](std::size_t f) {
            try {
                apply_update(rule, state.W[f], state.v_slice(f));
            } catch (const Error& e) {
                throw Error("mixture " + std::to_string(f) + ", iteration " +
                            std::to_string(iter + 1) + ": " + e.what());
            }
        });
        refresh_estimates(state, x, options.threads);
    }
    return result;
}

} // namespace iva::auxiva
