#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace iva::fft {

using cdouble = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transforms; length must be a power of two.
// inverse() includes the 1/n scaling.
void forward(std::span<cdouble> a);
void inverse(std::span<cdouble> a);

} // namespace iva::fft
