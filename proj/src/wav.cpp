#include "iva/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace iva::audio {

void TimeSignal::validate() const {
    for (const auto& ch : channels) {
        if (ch.size() != length()) throw InvalidInput("TimeSignal: channel lengths differ");
        for (double v : ch)
            if (!std::isfinite(v)) throw InvalidInput("TimeSignal: non-finite sample");
    }
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

struct ChunkHeader {
    char id[4];
    std::uint32_t size;
};

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

TimeSignal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char riff[12];
    if (!in.read(riff, 12) || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
        throw IoError(path + ": not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<unsigned char> payload;
    bool have_fmt = false, have_data = false;

    ChunkHeader hdr{};
    while (in.read(reinterpret_cast<char*>(&hdr), sizeof(hdr))) {
        std::vector<unsigned char> chunk(hdr.size);
        if (!in.read(reinterpret_cast<char*>(chunk.data()), hdr.size))
            throw IoError(path + ": truncated chunk");
        if (hdr.size % 2 == 1) in.ignore(1); // chunks are word aligned
        if (std::memcmp(hdr.id, "fmt ", 4) == 0) {
            if (chunk.size() < 16) throw IoError(path + ": malformed fmt chunk");
            format = read_u16(chunk.data());
            channels = read_u16(chunk.data() + 2);
            rate = read_u32(chunk.data() + 4);
            bits = read_u16(chunk.data() + 14);
            if (format == 0xFFFE && chunk.size() >= 40) format = read_u16(chunk.data() + 24);
            have_fmt = true;
        } else if (std::memcmp(hdr.id, "data", 4) == 0) {
            payload = std::move(chunk);
            have_data = true;
        }
    }
    if (!have_fmt || !have_data) throw IoError(path + ": missing fmt or data chunk");
    if (channels == 0) throw IoError(path + ": zero channels");

    TimeSignal sig;
    sig.sample_rate = rate;
    sig.channels.resize(channels);

    if (format == 1 && bits == 16) {
        const std::size_t frames = payload.size() / (2 * channels);
        for (auto& ch : sig.channels) ch.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            for (std::size_t c = 0; c < channels; ++c) {
                const unsigned char* p = payload.data() + 2 * (t * channels + c);
                const std::int16_t v = static_cast<std::int16_t>(read_u16(p));
                sig.channels[c][t] = static_cast<double>(v) / 32768.0;
            }
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t frames = payload.size() / (4 * channels);
        for (auto& ch : sig.channels) ch.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            for (std::size_t c = 0; c < channels; ++c) {
                float v;
                std::memcpy(&v, payload.data() + 4 * (t * channels + c), 4);
                sig.channels[c][t] = v;
            }
        }
    } else {
        throw IoError(path + ": unsupported format (want 16-bit PCM or 32-bit float), got format " +
                      std::to_string(format) + " with " + std::to_string(bits) + " bits");
    }
    return sig;
}

namespace {

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 24) & 0xFF);
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

} // namespace

void write_wav(const std::string& path, const TimeSignal& signal, SampleFormat format) {
    signal.validate();
    const std::size_t channels = signal.channel_count();
    const std::size_t frames = signal.length();
    if (channels == 0) throw InvalidInput("write_wav: no channels");

    const std::uint16_t bytes_per_sample = (format == SampleFormat::pcm16) ? 2 : 4;
    const std::uint32_t data_size =
        static_cast<std::uint32_t>(frames * channels * bytes_per_sample);

    std::vector<unsigned char> out;
    out.reserve(64 + data_size);
    put_tag(out, "RIFF");
    const bool is_float = format == SampleFormat::float32;
    const std::uint32_t fact_extra = is_float ? 12 : 0; // float files carry a fact chunk
    put_u32(out, 4 + (8 + 16) + fact_extra + (8 + data_size));
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, is_float ? 3 : 1);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * channels * bytes_per_sample);
    put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
    put_u16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
    if (is_float) {
        put_tag(out, "fact");
        put_u32(out, 4);
        put_u32(out, static_cast<std::uint32_t>(frames));
    }
    put_tag(out, "data");
    put_u32(out, data_size);

    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double v = signal.channels[c][t];
            if (format == SampleFormat::pcm16) {
                const double clamped = std::min(1.0, std::max(-1.0, v));
                const auto q = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
                put_u16(out, static_cast<std::uint16_t>(q));
            } else {
                const float f = static_cast<float>(v);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                put_u32(out, bits);
            }
        }
    }

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot create " + path);
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("short write to " + path);
}

} // namespace iva::audio
