#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iva/errors.hpp"

namespace iva::audio {

// Multichannel time-domain signal, one double vector per channel, samples
// normalized to [-1, 1] when read from integer PCM.
struct TimeSignal {
    double sample_rate = 0.0;
    std::vector<std::vector<double>> channels;

    std::size_t channel_count() const { return channels.size(); }
    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    void validate() const; // equal lengths, finite samples
};

enum class SampleFormat { pcm16, float32 };

// RIFF/WAVE reader: 16-bit PCM and 32-bit IEEE float, any channel count and
// sample rate.
TimeSignal read_wav(const std::string& path);

// float32 output round-trips bit-exactly through read_wav.
void write_wav(const std::string& path, const TimeSignal& signal,
               SampleFormat format = SampleFormat::float32);

} // namespace iva::audio
