#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace iva {

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is pinned by the C++ standard, so identical seeds produce
// identical streams on every platform. All variate transforms are written
// out here instead of using std::*_distribution, which the standard leaves
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derives an independent stream, e.g. one per benchmark trial. Mixes the
    // master seed and index through splitmix64 so neighboring indices do not
    // produce correlated mt19937 states.
    static Rng derive(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t x = master_seed + 0x9E3779B97F4A7C15ull * (index + 1);
        x = splitmix64(x);
        x = splitmix64(x ^ master_seed);
        return Rng(x);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the second variate of each pair is
    // cached so the stream consumption is deterministic.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        // log(0) guard; uniform() may return exactly 0
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // CN(0, 1): real and imaginary parts each N(0, 1/2), so E|v|^2 = 1.
    std::complex<double> complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * 0.7071067811865475244, im * 0.7071067811865475244};
    }

    double exponential() {
        double u = uniform();
        while (u == 0.0) u = uniform();
        return -std::log(u);
    }

    // Gamma(shape, 1) for integer shape, as a sum of unit exponentials.
    double gamma_integer_shape(int shape) {
        double s = 0.0;
        for (int i = 0; i < shape; ++i) s += exponential();
        return s;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace iva
