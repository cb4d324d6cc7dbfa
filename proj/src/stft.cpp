#include "iva/stft.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "iva/fft.hpp"
#include "iva/kernels.hpp"
#include "iva/metrics.hpp"
#include "iva/parallel.hpp"
#include "iva/synth.hpp"

namespace iva::stft {

using linalg::cdouble;

void StftConfig::validate() const {
    if (!fft::is_power_of_two(frame_size)) throw InvalidInput("stft: frame_size must be a power of two");
    if (hop == 0 || frame_size % hop != 0) throw InvalidInput("stft: hop must divide frame_size");
    if (hop > frame_size) throw InvalidInput("stft: hop larger than frame");
}

std::vector<double> hamming_window(std::size_t n) {
    std::vector<double> w(n);
    constexpr double two_pi = 6.28318530717958647692528676655900577;
    for (std::size_t t = 0; t < n; ++t)
        w[t] = 0.54 - 0.46 * std::cos(two_pi * static_cast<double>(t) / static_cast<double>(n));
    return w;
}

std::vector<double> canonical_dual_window(const std::vector<double>& analysis, std::size_t hop) {
    const std::size_t n = analysis.size();
    std::vector<double> denom(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        // sum of squared analysis window over every hop shift that still
        // overlaps position t; periodic in t with period hop in the interior
        const std::size_t base = t % hop;
        for (std::size_t s = base; s < n; s += hop) denom[t] += analysis[s] * analysis[s];
    }
    std::vector<double> dual(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (!(denom[t] > 0.0)) throw InvalidInput("stft: window/hop pair is not invertible");
        dual[t] = analysis[t] / denom[t];
    }
    return dual;
}

MixtureTensor stft(const TimeSignal& x, const StftConfig& cfg) {
    cfg.validate();
    x.validate();
    const std::size_t channels = x.channel_count();
    const std::size_t len = x.length();
    const std::size_t frame = cfg.frame_size;
    if (len < frame) throw TooShort("stft: signal shorter than one frame");

    const std::size_t pad = frame;
    const std::size_t padded = len + 2 * pad;
    const std::size_t frames = (padded - frame) / cfg.hop + 1;
    const std::size_t bins = cfg.bins();

    const std::vector<double> window = hamming_window(frame);
    MixtureTensor out(bins, channels, frames);

    const auto& ops = kernels::active();
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<double> buf(frame);
        std::vector<cdouble> spec(frame);
        for (std::size_t p = 0; p < frames; ++p) {
            const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(p * cfg.hop) -
                                         static_cast<std::ptrdiff_t>(pad);
            // gather with implicit zero padding
            for (std::size_t t = 0; t < frame; ++t) {
                const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(t);
                buf[t] = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len))
                             ? x.channels[c][static_cast<std::size_t>(idx)]
                             : 0.0;
            }
            ops.window_multiply(buf.data(), buf.data(), window.data(), frame);
            for (std::size_t t = 0; t < frame; ++t) spec[t] = buf[t];
            fft::forward(spec);
            for (std::size_t f = 0; f < bins; ++f) out.at(f, c, p) = spec[f];
        }
    }
    return out;
}

TimeSignal istft(const MixtureTensor& s, const StftConfig& cfg, double sample_rate,
                 std::size_t length) {
    cfg.validate();
    const std::size_t frame = cfg.frame_size;
    const std::size_t bins = cfg.bins();
    if (s.F != bins) throw InvalidInput("istft: tensor bin count does not match config");

    const std::size_t frames = s.N;
    const std::size_t channels = s.M;
    const std::size_t pad = frame;
    const std::size_t padded = (frames - 1) * cfg.hop + frame;

    const std::vector<double> dual = canonical_dual_window(hamming_window(frame), cfg.hop);
    const auto& ops = kernels::active();

    TimeSignal out;
    out.sample_rate = sample_rate;
    out.channels.resize(channels);

    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<double> ola(padded, 0.0);
        std::vector<cdouble> spec(frame);
        std::vector<double> buf(frame);
        for (std::size_t p = 0; p < frames; ++p) {
            // rebuild the redundant half of the spectrum by conjugate symmetry
            for (std::size_t f = 0; f < bins; ++f) spec[f] = s.at(f, c, p);
            for (std::size_t f = bins; f < frame; ++f) spec[f] = std::conj(s.at(frame - f, c, p));
            fft::inverse(spec);
            for (std::size_t t = 0; t < frame; ++t) buf[t] = spec[t].real();
            ops.window_multiply_add(ola.data() + p * cfg.hop, buf.data(), dual.data(), frame);
        }
        // drop the analysis padding; with an explicit length anything after
        // the left pad is fair game (the tail frames cover it fully)
        const std::size_t right_limit = padded > pad ? padded - pad : 0;
        const std::size_t natural = padded > 2 * pad ? padded - 2 * pad : 0;
        const std::size_t want = length == 0 ? natural : std::min(length, right_limit);
        out.channels[c].assign(ola.begin() + static_cast<std::ptrdiff_t>(pad),
                               ola.begin() + static_cast<std::ptrdiff_t>(pad + want));
        if (length != 0 && want < length) out.channels[c].resize(length, 0.0);
    }
    return out;
}

std::vector<ComplexMatrix> restore_scale(std::span<const ComplexMatrix> w,
                                         std::size_t reference_channel) {
    std::vector<ComplexMatrix> out(w.begin(), w.end());
    for (ComplexMatrix& wf : out) {
        const ComplexMatrix a = linalg::inverse(wf); // throws Singular
        for (std::size_t k = 0; k < wf.rows(); ++k) {
            const cdouble scale = a(reference_channel, k);
            for (std::size_t j = 0; j < wf.cols(); ++j) wf(k, j) *= scale;
        }
    }
    return out;
}

SeparateResult separate(const TimeSignal& mix, const SeparateOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    mix.validate();
    const std::size_t m = mix.channel_count();
    if (m < 2) throw InvalidInput("separate: need at least two channels");
    options.cfg.validate();

    const MixtureTensor x = stft(mix, options.cfg);
    const contrast::ContrastModel& model = contrast::find(options.contrast);

    auxiva::RunOptions run_opts;
    run_opts.iterations = options.iterations;
    run_opts.threads = options.threads;
    run_opts.early_stop_cost_decrease = options.early_stop_cost_decrease
                                            ? options.early_stop_cost_decrease
                                            : std::optional<double>(10.0 * static_cast<double>(m));
    if (run_opts.early_stop_cost_decrease && *run_opts.early_stop_cost_decrease <= 0.0)
        run_opts.early_stop_cost_decrease.reset();

    auxiva::RunResult run_result = auxiva::run(x, options.rule, model,
                                               synth::pca_init(x, options.threads), run_opts);

    const std::vector<ComplexMatrix> w_scaled =
        restore_scale(run_result.state.W, options.reference_channel);

    // apply the rescaled demixing to the mixture spectra
    MixtureTensor separated(x.F, m, x.N);
    const auto& ops = kernels::active();
    parallel_for(x.F, options.threads, [&](std::size_t f) {
        ops.matvec_frames(separated.frame(f, 0), w_scaled[f].data(), x.frame(f, 0), m, x.N);
    });

    // tensor channel k now holds source k; synthesize each one separately
    SeparateResult result;
    result.report = std::move(run_result.report);
    const TimeSignal all = istft(separated, options.cfg, mix.sample_rate, mix.length());
    result.sources.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        TimeSignal s;
        s.sample_rate = mix.sample_rate;
        s.channels.push_back(all.channels[k]);
        result.sources.push_back(std::move(s));
    }

    if (options.references != nullptr) {
        options.references->validate();
        if (options.references->channel_count() != m)
            throw InvalidInput("separate: reference channel count must match source count");
        std::vector<std::vector<double>> refs = options.references->channels;
        std::vector<std::vector<double>> ests;
        ests.reserve(m);
        const std::size_t t_len = std::min(options.references->length(), mix.length());
        for (auto& r : refs) r.resize(t_len);
        for (std::size_t k = 0; k < m; ++k) {
            ests.push_back(result.sources[k].channels[0]);
            ests.back().resize(t_len);
        }
        std::vector<double> mix_ref = mix.channels[options.reference_channel];
        mix_ref.resize(t_len);
        const metrics::PermutationMetrics pm = metrics::best_permutation_metrics(refs, ests, &mix_ref);
        result.report.si_sdr_db = pm.si_sdr_db;
        result.report.si_sir_db = pm.si_sir_db;
        result.report.delta_si_sdr_db = pm.delta_si_sdr_db;
        result.report.delta_si_sir_db = pm.delta_si_sir_db;
    }

    result.report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

report::SeparationReport separate_file(const std::string& in_wav, const std::string& out_dir,
                                       const SeparateOptions& options) {
    const TimeSignal mix = audio::read_wav(in_wav);
    SeparateResult result = separate(mix, options);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string stem = fs::path(in_wav).stem().string();
    for (std::size_t k = 0; k < result.sources.size(); ++k) {
        const fs::path out = fs::path(out_dir) / (stem + "_src" + std::to_string(k) + ".wav");
        audio::write_wav(out.string(), result.sources[k]);
    }
    return result.report;
}

} // namespace iva::stft
