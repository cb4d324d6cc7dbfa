#include "iva/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iva::metrics {

double to_db(double linear_ratio) {
    if (!(linear_ratio > 0.0)) return -kDbCap; // 0 or negative round-off
    return std::clamp(10.0 * std::log10(linear_ratio), -kDbCap, kDbCap);
}

double sedjoco_residual(const ComplexMatrix& w, std::span<const ComplexMatrix> v) {
    const std::size_t m = w.rows();
    if (v.size() != m) throw InvalidInput("sedjoco_residual: need one covariance per source");
    ComplexMatrix b(m, m); // column k = V_k w_k
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            cdouble s{};
            for (std::size_t j = 0; j < m; ++j) s += v[k](i, j) * std::conj(w(k, j));
            b(i, k) = s;
        }
    }
    ComplexMatrix r = multiply(w, b);
    for (std::size_t i = 0; i < m; ++i) r(i, i) -= 1.0;
    const double fro = r.frobenius_norm();
    return fro * fro;
}

namespace {

template <typename Fn>
void for_each_permutation(std::size_t m, Fn&& fn) {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
        fn(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
}

} // namespace

double isr(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> a) {
    if (w.empty() || w.size() != a.size()) throw InvalidInput("isr: need matching W and A per mixture");
    const std::size_t f_count = w.size();
    const std::size_t m = w[0].rows();
    if (m < 2) throw InvalidInput("isr: undefined for a single source");
    if (m > 8) throw InvalidInput("isr: exhaustive permutation search limited to 8 sources");

    // per (row, candidate source): sum over mixtures of off/diag energy ratio
    std::vector<double> score(m * m, 0.0);
    std::vector<bool> usable(m * m, true);
    for (std::size_t f = 0; f < f_count; ++f) {
        const ComplexMatrix g = multiply(w[f], a[f]);
        for (std::size_t row = 0; row < m; ++row) {
            double rowsum = 0.0;
            for (std::size_t k = 0; k < m; ++k) rowsum += std::norm(g(row, k));
            for (std::size_t k = 0; k < m; ++k) {
                const double target = std::norm(g(row, k));
                if (target == 0.0)
                    usable[row * m + k] = false;
                else
                    score[row * m + k] += (rowsum - target) / target;
            }
        }
    }

    double best = std::numeric_limits<double>::infinity();
    for_each_permutation(m, [&](const std::vector<std::size_t>& perm) {
        double total = 0.0;
        for (std::size_t row = 0; row < m; ++row) {
            if (!usable[row * m + perm[row]]) return; // skip this permutation
            total += score[row * m + perm[row]];
        }
        best = std::min(best, total);
    });
    const double denom = static_cast<double>(f_count) * static_cast<double>(m * m - m);
    return best / denom;
}

double isr_db(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> a) {
    return to_db(isr(w, a));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double energy(std::span<const double> a) { return dot(a, a); }

double alignment(std::span<const double> reference, std::span<const double> estimate) {
    const double e = energy(reference);
    if (!(e > 0.0)) throw InvalidInput("si metrics: reference has zero energy");
    return dot(estimate, reference) / e;
}

} // namespace

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
    if (reference.size() != estimate.size()) throw InvalidInput("si_sdr: length mismatch");
    const double alpha = alignment(reference, estimate);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < reference.size(); ++t) {
        const double a = alpha * reference[t];
        const double d = a - estimate[t];
        num += a * a;
        den += d * d;
    }
    if (den == 0.0) return kDbCap;
    return to_db(num / den);
}

double si_sir(std::span<const std::vector<double>> references, std::span<const double> estimate,
              std::size_t target_index) {
    const std::size_t m = references.size();
    const std::size_t t_len = estimate.size();
    for (const auto& r : references)
        if (r.size() != t_len) throw InvalidInput("si_sir: length mismatch");

    const std::vector<double>& s = references[target_index];
    const double alpha = alignment(s, estimate);

    // b = (S^T S)^{-1} S^T (alpha s - estimate); S has the references as columns
    ComplexMatrix gram(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) gram(i, j) = dot(references[i], references[j]);
    std::vector<double> resid(t_len);
    for (std::size_t t = 0; t < t_len; ++t) resid[t] = alpha * s[t] - estimate[t];
    linalg::ComplexVector rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = dot(references[i], resid);

    linalg::ComplexVector b;
    try {
        b = linalg::solve(gram, rhs);
    } catch (const Singular&) {
        throw DegenerateReference("si_sir: reference Gram matrix is singular");
    }

    double num = 0.0;
    for (double v : s) num += v * v;
    num *= alpha * alpha;
    double den = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += b[i].real() * references[i][t];
        den += proj * proj;
    }
    if (den == 0.0) return kDbCap;
    return to_db(num / den);
}

PermutationMetrics best_permutation_metrics(std::span<const std::vector<double>> references,
                                            std::span<const std::vector<double>> estimates,
                                            const std::vector<double>* mixture) {
    const std::size_t m = references.size();
    if (estimates.size() != m) throw InvalidInput("best_permutation_metrics: count mismatch");
    if (m > 8)
        throw InvalidInput("best_permutation_metrics: exhaustive search limited to 8 sources");

    // pairwise tables: metric of estimate j scored against reference i
    std::vector<double> sdr_table(m * m), sir_table(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            sdr_table[i * m + j] = si_sdr(references[i], estimates[j]);
            sir_table[i * m + j] = si_sir(references, estimates[j], i);
        }
    }

    std::vector<std::size_t> best_perm;
    double best_total = -std::numeric_limits<double>::infinity();
    for_each_permutation(m, [&](const std::vector<std::size_t>& perm) {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) total += sir_table[i * m + perm[i]];
        if (total > best_total) {
            best_total = total;
            best_perm = perm;
        }
    });

    PermutationMetrics out;
    out.permutation = best_perm;
    out.si_sdr_db.resize(m);
    out.si_sir_db.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.si_sdr_db[i] = sdr_table[i * m + best_perm[i]];
        out.si_sir_db[i] = sir_table[i * m + best_perm[i]];
    }
    if (mixture != nullptr) {
        out.delta_si_sdr_db.resize(m);
        out.delta_si_sir_db.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            out.delta_si_sdr_db[i] = out.si_sdr_db[i] - si_sdr(references[i], *mixture);
            out.delta_si_sir_db[i] = out.si_sir_db[i] - si_sir(references, *mixture, i);
        }
    }
    return out;
}

} // namespace iva::metrics
