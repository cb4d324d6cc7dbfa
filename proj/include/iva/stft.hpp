#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iva/audio.hpp"
#include "iva/auxiva.hpp"

namespace iva::stft {

using audio::TimeSignal;
using auxiva::MixtureTensor;
using linalg::ComplexMatrix;

// Analysis with a periodic Hamming window; synthesis with its canonical dual
// for the given hop, which makes the analysis/synthesis pair reconstruct
// interior samples exactly.
struct StftConfig {
    std::size_t frame_size = 4096;
    std::size_t hop = 1024;

    std::size_t bins() const { return frame_size / 2 + 1; }
    void validate() const; // power-of-two frame, hop divides frame
};

std::vector<double> hamming_window(std::size_t n);
// d[t] = w[t] / sum_j w[t + j*hop]^2 over all in-range shifts.
std::vector<double> canonical_dual_window(const std::vector<double>& analysis, std::size_t hop);

// Frames the signal (zero-padded by one frame on both ends), windows,
// transforms, and keeps the frame_size/2 + 1 non-redundant bins of the real
// input. Throws TooShort when the signal is shorter than one frame.
MixtureTensor stft(const TimeSignal& x, const StftConfig& cfg);

// Overlap-add synthesis with the dual window. `length` trims the output to
// the original sample count; pass 0 to keep everything between the pads.
TimeSignal istft(const MixtureTensor& s, const StftConfig& cfg, double sample_rate,
                 std::size_t length = 0);

// Minimal-distortion rescaling: row k of W_f is multiplied by (W_f^{-1})_{ref,k}
// so each separated source approximates its image at the reference channel.
std::vector<ComplexMatrix> restore_scale(std::span<const ComplexMatrix> w,
                                         std::size_t reference_channel);

struct SeparateOptions {
    auxiva::UpdateRule rule = auxiva::UpdateRule::ipa;
    int iterations = 100;
    unsigned threads = 1;
    StftConfig cfg;
    std::string contrast = "laplace";
    std::size_t reference_channel = 0;
    // stop when one iteration decreases the cost by less than this; defaults
    // to 10 * M as in the runtime benchmarks, pass 0 to disable
    std::optional<double> early_stop_cost_decrease;
    // per-source reference signals; enables SI-SDR/SI-SIR in the report
    const TimeSignal* references = nullptr;
};

struct SeparateResult {
    std::vector<TimeSignal> sources; // one mono signal per source
    report::SeparationReport report;
};

// The full frequency-domain pipeline: STFT, whitening init, the MM loop,
// scale restoration, inverse STFT. When references are supplied the report
// carries the best-permutation SI-SDR/SI-SIR and their improvements over the
// reference-channel mixture.
SeparateResult separate(const TimeSignal& mix, const SeparateOptions& options);

// Reads a multichannel WAV, separates it, and writes <stem>_src<k>.wav files
// into out_dir. Returns the report.
report::SeparationReport separate_file(const std::string& in_wav, const std::string& out_dir,
                                       const SeparateOptions& options);

} // namespace iva::stft
