// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; the dispatcher only hands out these function pointers after
// a cpuid check, so no AVX instruction executes on unsupported hardware.

#include "iva/kernels.hpp"

#if defined(IVA_HAVE_AVX2_KERNELS)

#include <immintrin.h>

namespace iva::kernels {

namespace avx2 {

// One __m256d holds two complex doubles [re0, im0, re1, im1].

// y * conj(x) for a broadcast complex y = (a, b) against a two-complex lane:
// even lanes a*re + b*im, odd lanes b*re - a*im.
static inline __m256d mul_conj_lane(__m256d va, __m256d vb, __m256d x) {
    const __m256d odd_neg = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
    const __m256d xswap = _mm256_permute_pd(x, 0x5);
    const __m256d p = _mm256_xor_pd(_mm256_mul_pd(va, x), odd_neg);
    return _mm256_fmadd_pd(vb, xswap, p);
}

void weighted_outer_acc(cdouble* v, const cdouble* frames, const double* w,
                        std::size_t m, std::size_t n) {
    const std::size_t pairs = m / 2;
    for (std::size_t t = 0; t < n; ++t) {
        const double* x = reinterpret_cast<const double*>(frames + t * m);
        const double wt = w[t];
        for (std::size_t i = 0; i < m; ++i) {
            const double a = wt * x[2 * i];
            const double b = wt * x[2 * i + 1];
            const __m256d va = _mm256_set1_pd(a);
            const __m256d vb = _mm256_set1_pd(b);
            double* row = reinterpret_cast<double*>(v + i * m);
            for (std::size_t j = 0; j < pairs; ++j) {
                const __m256d xj = _mm256_loadu_pd(x + 4 * j);
                const __m256d acc = _mm256_loadu_pd(row + 4 * j);
                _mm256_storeu_pd(row + 4 * j, _mm256_add_pd(acc, mul_conj_lane(va, vb, xj)));
            }
            if (m & 1) {
                const std::size_t j = m - 1;
                const double c = x[2 * j], d = x[2 * j + 1];
                row[2 * j] += a * c + b * d;
                row[2 * j + 1] += b * c - a * d;
            }
        }
    }
}

void matvec_frames(cdouble* out, const cdouble* w, const cdouble* frames,
                   std::size_t m, std::size_t n) {
    const std::size_t pairs = m / 2;
    for (std::size_t t = 0; t < n; ++t) {
        const double* x = reinterpret_cast<const double*>(frames + t * m);
        double* y = reinterpret_cast<double*>(out + t * m);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = reinterpret_cast<const double*>(w + i * m);
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t j = 0; j < pairs; ++j) {
                const __m256d vw = _mm256_loadu_pd(row + 4 * j);
                const __m256d vx = _mm256_loadu_pd(x + 4 * j);
                // elementwise complex product of two lanes
                const __m256d w_re = _mm256_movedup_pd(vw);
                const __m256d w_im = _mm256_permute_pd(vw, 0xF);
                const __m256d x_swap = _mm256_permute_pd(vx, 0x5);
                const __m256d prod = _mm256_addsub_pd(_mm256_mul_pd(w_re, vx),
                                                      _mm256_mul_pd(w_im, x_swap));
                acc = _mm256_add_pd(acc, prod);
            }
            __m128d s = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
            double re = _mm_cvtsd_f64(s);
            double im = _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
            if (m & 1) {
                const std::size_t j = m - 1;
                const double wr = row[2 * j], wi = row[2 * j + 1];
                const double xr = x[2 * j], xi = x[2 * j + 1];
                re += wr * xr - wi * xi;
                im += wr * xi + wi * xr;
            }
            y[2 * i] = re;
            y[2 * i + 1] = im;
        }
    }
}

void window_multiply(double* dst, const double* src, const double* win, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(src + i), _mm256_loadu_pd(win + i)));
    for (; i < n; ++i) dst[i] = src[i] * win[i];
}

void window_multiply_add(double* dst, const double* src, const double* win, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d acc = _mm256_loadu_pd(dst + i);
        _mm256_storeu_pd(dst + i,
                         _mm256_fmadd_pd(_mm256_loadu_pd(src + i), _mm256_loadu_pd(win + i), acc));
    }
    for (; i < n; ++i) dst[i] += src[i] * win[i];
}

} // namespace avx2

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Ops& avx2_ops() {
    static const Ops ops{avx2::weighted_outer_acc, avx2::matvec_frames,
                         avx2::window_multiply, avx2::window_multiply_add, "avx2"};
    return ops;
}

} // namespace iva::kernels

#endif // IVA_HAVE_AVX2_KERNELS
