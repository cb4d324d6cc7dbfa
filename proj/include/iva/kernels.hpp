#pragma once

#include <complex>
#include <cstddef>

namespace iva::kernels {

using cdouble = std::complex<double>;

// Hot inner loops of the separation pipeline. Each operation has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant selected once
// at startup. The variants are equivalence-tested against the scalar
// reference; accumulation order may differ, so agreement is to rounding, not
// bit-exact. Within one variant results are fully deterministic.
struct Ops {
    // V (m x m, row-major) += sum_n w[n] * x_n x_n^H, frames stored
    // contiguously as N blocks of m complex values.
    void (*weighted_outer_acc)(cdouble* v, const cdouble* frames, const double* w,
                               std::size_t m, std::size_t n);
    // out_n = W x_n for every frame; W is m x m row-major. out must not
    // alias frames.
    void (*matvec_frames)(cdouble* out, const cdouble* w, const cdouble* frames,
                          std::size_t m, std::size_t n);
    // dst[i] = src[i] * win[i]
    void (*window_multiply)(double* dst, const double* src, const double* win, std::size_t n);
    // dst[i] += src[i] * win[i]
    void (*window_multiply_add)(double* dst, const double* src, const double* win, std::size_t n);

    const char* name;
};

// Kernel set chosen at first use: AVX2 when the CPU supports it, otherwise
// scalar. Environment variable IVA_KERNELS=scalar|avx2 forces a variant
// (useful for equivalence testing and debugging).
const Ops& active();

const Ops& scalar_ops();

bool avx2_available();
// Valid only when avx2_available(); falls back to scalar_ops() on other
// architectures so callers can iterate over variants generically.
const Ops& avx2_ops();

} // namespace iva::kernels
