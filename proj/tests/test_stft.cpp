#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "iva/fft.hpp"
#include "iva/stft.hpp"

using namespace iva;
using namespace iva::stft;
using audio::TimeSignal;

namespace {

TimeSignal random_signal(std::size_t channels, std::size_t len, double rate, Rng& rng) {
    TimeSignal s;
    s.sample_rate = rate;
    s.channels.assign(channels, std::vector<double>(len));
    for (auto& ch : s.channels)
        for (double& v : ch) v = 0.3 * rng.normal();
    return s;
}

double roundtrip_error(const TimeSignal& x, const StftConfig& cfg) {
    const auxiva::MixtureTensor spec = iva::stft::stft(x, cfg);
    const TimeSignal back = istft(spec, cfg, x.sample_rate, x.length());
    // compare away from the edges, one frame on each side
    const std::size_t lo = cfg.frame_size;
    const std::size_t hi = x.length() > cfg.frame_size ? x.length() - cfg.frame_size : lo;
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < x.channel_count(); ++c) {
        for (std::size_t t = lo; t < hi; ++t) {
            const double d = back.channels[c][t] - x.channels[c][t];
            num += d * d;
            den += x.channels[c][t] * x.channels[c][t];
        }
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

} // namespace

TEST_CASE("fft roundtrip and basis vectors") {
    Rng rng(801);
    std::vector<linalg::cdouble> a(256);
    for (auto& c : a) c = rng.complex_normal();
    std::vector<linalg::cdouble> b = a;
    fft::forward(b);
    fft::inverse(b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);

    // impulse transforms to the all-ones spectrum
    std::vector<linalg::cdouble> imp(8, 0.0);
    imp[0] = 1.0;
    fft::forward(imp);
    for (const auto& c : imp) CHECK(std::abs(c - 1.0) < 1e-14);

    CHECK_THROWS_AS(fft::forward(std::span<linalg::cdouble>(a.data(), 3)), InvalidInput);
}

TEST_CASE("analysis/synthesis window pair reconstructs unity") {
    for (std::size_t frame : {256u, 1024u, 4096u}) {
        const std::size_t hop = frame / 4;
        const std::vector<double> w = hamming_window(frame);
        const std::vector<double> d = canonical_dual_window(w, hop);
        // sum_j w[t - j hop] d[t - j hop] = 1 for every residue class
        for (std::size_t t = 0; t < hop; ++t) {
            double s = 0.0;
            for (std::size_t shift = t; shift < frame; shift += hop) s += w[shift] * d[shift];
            CHECK(std::abs(s - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("stft basics") {
    StftConfig cfg;
    cfg.frame_size = 1024;
    cfg.hop = 256;
    Rng rng(802);

    SUBCASE("zero signal gives zero tensor") {
        TimeSignal x;
        x.sample_rate = 16000;
        x.channels.assign(1, std::vector<double>(4096, 0.0));
        const auxiva::MixtureTensor spec = iva::stft::stft(x, cfg);
        CHECK(spec.F == cfg.bins());
        for (const auto& c : spec.data) CHECK(std::abs(c) == 0.0);
    }

    SUBCASE("too-short input throws") {
        TimeSignal x;
        x.sample_rate = 16000;
        x.channels.assign(1, std::vector<double>(100, 0.0));
        CHECK_THROWS_AS(iva::stft::stft(x, cfg), TooShort);
    }

    SUBCASE("bin-centered sinusoid concentrates its energy") {
        const std::size_t len = 8192;
        const std::size_t bin = 37;
        TimeSignal x;
        x.sample_rate = 16000;
        x.channels.assign(1, std::vector<double>(len));
        for (std::size_t t = 0; t < len; ++t)
            x.channels[0][t] =
                std::cos(2.0 * M_PI * static_cast<double>(bin * t) / cfg.frame_size);
        const auxiva::MixtureTensor spec = iva::stft::stft(x, cfg);
        // pick an interior frame (away from the zero padding); the Hamming
        // main lobe spans two bins either side of the tone
        const std::size_t p = spec.N / 2;
        double total = 0.0, lobe = 0.0;
        for (std::size_t f = 0; f < spec.F; ++f) {
            const double e = std::norm(spec.at(f, 0, p));
            total += e;
            if (f + 2 >= bin && f <= bin + 2) lobe += e;
        }
        CHECK(lobe / total > 0.99);
    }

    SUBCASE("roundtrip: noise, sinusoid, multichannel") {
        TimeSignal noise = random_signal(2, 6000, 16000, rng);
        CHECK(roundtrip_error(noise, cfg) < 1e-6);

        TimeSignal tone;
        tone.sample_rate = 16000;
        tone.channels.assign(1, std::vector<double>(6000));
        for (std::size_t t = 0; t < 6000; ++t)
            tone.channels[0][t] = std::sin(0.01 * static_cast<double>(t));
        CHECK(roundtrip_error(tone, cfg) < 1e-6);
    }

    SUBCASE("synthesizing from the stored half-spectrum leaves no imaginary residue") {
        TimeSignal x = random_signal(1, 5000, 16000, rng);
        const auxiva::MixtureTensor spec = iva::stft::stft(x, cfg);
        const std::size_t frame = cfg.frame_size;
        const std::size_t bins = cfg.bins();
        const std::size_t p = spec.N / 2;
        // mirror the non-redundant bins into a full spectrum and invert; the
        // discarded imaginary part must be at rounding level
        std::vector<linalg::cdouble> full(frame);
        for (std::size_t f = 0; f < bins; ++f) full[f] = spec.at(f, 0, p);
        for (std::size_t f = bins; f < frame; ++f) full[f] = std::conj(spec.at(frame - f, 0, p));
        fft::inverse(full);
        double imag = 0.0, real = 0.0;
        for (const auto& c : full) {
            imag += c.imag() * c.imag();
            real += c.real() * c.real();
        }
        CHECK(std::sqrt(imag) <= 1e-10 * std::max(std::sqrt(real), 1e-300));
    }
}

TEST_CASE("paper configuration roundtrip") {
    StftConfig cfg; // 4096 / 1024 defaults
    Rng rng(803);
    TimeSignal x = random_signal(1, 4 * 4096 + 123, 16000, rng);
    CHECK(roundtrip_error(x, cfg) < 1e-6);
}

TEST_CASE("scale restoration") {
    Rng rng(804);
    SUBCASE("reference-channel row is normalized, scaled demixing is undone") {
        // projection back multiplies row k by (W^{-1})_{ref,k}: the source
        // aligned with the reference channel keeps unit scale
        std::vector<linalg::ComplexMatrix> w{linalg::ComplexMatrix::identity(2)};
        const auto r = restore_scale(w, 0);
        CHECK(r[0](0, 0).real() == doctest::Approx(1.0));
        CHECK(std::abs(r[0](0, 1)) == 0.0);

        linalg::ComplexMatrix two = linalg::ComplexMatrix::identity(2);
        two *= 2.0;
        const auto r2 = restore_scale(std::vector<linalg::ComplexMatrix>{two}, 0);
        // (W^{-1})_{0,0} = 1/2 cancels the factor 2 on the reference row
        CHECK(r2[0](0, 0).real() == doctest::Approx(1.0));
    }
    SUBCASE("only a diagonal factor is applied") {
        const linalg::ComplexMatrix w = testutil::random_matrix(3, 3, rng);
        const auto r = restore_scale(std::vector<linalg::ComplexMatrix>{w}, 1);
        // r = D w for some diagonal D: check rows are proportional and the
        // factor matches the mixing-estimate entry at the reference channel
        const linalg::ComplexMatrix a = linalg::inverse(w);
        for (std::size_t i = 0; i < 3; ++i) {
            const linalg::cdouble ratio = r[0](i, 0) / w(i, 0);
            CHECK(std::abs(ratio - a(1, i)) < 1e-12);
            for (std::size_t j = 1; j < 3; ++j)
                CHECK(std::abs(r[0](i, j) - ratio * w(i, j)) < 1e-12);
        }
    }
    SUBCASE("single active source is reproduced at the reference channel") {
        // mixture column k only: x = a_k s_k; after restoration source k's
        // output equals the reference-channel image a_{ref,k} s_k
        const std::size_t m = 2;
        linalg::ComplexMatrix a = testutil::random_matrix(m, m, rng);
        std::vector<linalg::ComplexMatrix> w{linalg::inverse(a)};
        const auto r = restore_scale(w, 0);
        linalg::ComplexVector s{linalg::cdouble(0.7, -0.2), 0.0}; // only source 0 active
        const linalg::ComplexVector x = multiply(a, s);
        const linalg::ComplexVector y = multiply(r[0], x);
        CHECK(std::abs(y[0] - a(0, 0) * s[0]) < 1e-10);
    }
}

TEST_CASE("wav io") {
    Rng rng(805);
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ivasep_wav_test";
    fs::create_directories(dir);

    SUBCASE("float32 roundtrip is bit exact") {
        TimeSignal x = random_signal(2, 1000, 16000, rng);
        // quantize to float so the comparison is exact
        for (auto& ch : x.channels)
            for (double& v : ch) v = static_cast<float>(v);
        const std::string path = (dir / "f32.wav").string();
        audio::write_wav(path, x, audio::SampleFormat::float32);
        const TimeSignal y = audio::read_wav(path);
        REQUIRE(y.channel_count() == 2);
        REQUIRE(y.length() == 1000);
        CHECK(y.sample_rate == doctest::Approx(16000.0));
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t t = 0; t < 1000; ++t) CHECK(y.channels[c][t] == x.channels[c][t]);
    }

    SUBCASE("pcm16 roundtrip within quantization") {
        TimeSignal x = random_signal(1, 500, 8000, rng);
        const std::string path = (dir / "s16.wav").string();
        audio::write_wav(path, x, audio::SampleFormat::pcm16);
        const TimeSignal y = audio::read_wav(path);
        for (std::size_t t = 0; t < 500; ++t)
            CHECK(y.channels[0][t] == doctest::Approx(x.channels[0][t]).epsilon(2e-4));
    }

    SUBCASE("missing file throws") {
        CHECK_THROWS_AS(audio::read_wav((dir / "nope.wav").string()), IoError);
    }
}

TEST_CASE("separation of an instantaneous two-channel mixture") {
    Rng rng(806);
    const std::size_t len = 16000 * 3;
    // two independent Laplacian-ish noise sources with amplitude modulation
    TimeSignal sources;
    sources.sample_rate = 16000;
    sources.channels.assign(2, std::vector<double>(len));
    for (std::size_t t = 0; t < len; ++t) {
        const double env0 = 0.6 + 0.4 * std::sin(2.0 * M_PI * t / 16000.0 * 1.3);
        const double env1 = 0.6 + 0.4 * std::cos(2.0 * M_PI * t / 16000.0 * 0.7);
        sources.channels[0][t] = 0.2 * env0 * rng.normal() * rng.normal();
        sources.channels[1][t] = 0.2 * env1 * rng.normal() * rng.normal();
    }
    // instantaneous mixing
    TimeSignal mix;
    mix.sample_rate = 16000;
    mix.channels.assign(2, std::vector<double>(len));
    for (std::size_t t = 0; t < len; ++t) {
        mix.channels[0][t] = 0.8 * sources.channels[0][t] + 0.6 * sources.channels[1][t];
        mix.channels[1][t] = 0.45 * sources.channels[0][t] - 0.85 * sources.channels[1][t];
    }

    SeparateOptions opts;
    opts.rule = auxiva::UpdateRule::ipa;
    opts.iterations = 30;
    opts.cfg.frame_size = 1024;
    opts.cfg.hop = 256;
    opts.early_stop_cost_decrease = 0.0; // run all iterations
    opts.references = &sources;

    const SeparateResult res = separate(mix, opts);
    REQUIRE(res.sources.size() == 2);
    REQUIRE(res.report.delta_si_sir_db.size() == 2);
    for (double d : res.report.delta_si_sir_db) CHECK(d > 10.0);
    // cost trace is monotone
    for (std::size_t i = 1; i < res.report.records.size(); ++i)
        CHECK(res.report.records[i].iva_cost <=
              res.report.records[i - 1].iva_cost +
                  1e-6 * std::abs(res.report.records[i - 1].iva_cost));
}

TEST_CASE("report csv shape") {
    report::SeparationReport rep;
    report::IterationRecord rec;
    rec.iteration = 0;
    rec.iva_cost = 1.5;
    rec.surrogate_cost = 2.5;
    rep.records.push_back(rec);
    rec.iteration = 1;
    rec.isr_db = -12.0;
    rep.records.push_back(rec);
    const std::string csv = rep.to_csv();
    CHECK(csv.rfind("iteration,iva_cost,surrogate_cost,sedjoco_residual,isr_db\n", 0) == 0);
    CHECK(csv.find("\n0,1.5,2.5,,\n") != std::string::npos);
    CHECK(csv.find("\n1,1.5,2.5,,-12\n") != std::string::npos);
}
