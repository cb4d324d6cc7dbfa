#include "iva/fft.hpp"

#include <cmath>
#include <vector>

#include "iva/errors.hpp"

namespace iva::fft {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676655900577;

void transform(std::span<cdouble> a, double sign) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw InvalidInput("fft: length must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    // twiddle table at full resolution; stage `len` strides it by n/len
    std::vector<cdouble> root(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = sign * kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        root[k] = cdouble(std::cos(angle), std::sin(angle));
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t base = 0; base < n; base += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cdouble u = a[base + k];
                const cdouble v = a[base + k + len / 2] * root[k * stride];
                a[base + k] = u + v;
                a[base + k + len / 2] = u - v;
            }
        }
    }
}

} // namespace

void forward(std::span<cdouble> a) { transform(a, -1.0); }

void inverse(std::span<cdouble> a) {
    transform(a, 1.0);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (cdouble& v : a) v *= scale;
}

} // namespace iva::fft
