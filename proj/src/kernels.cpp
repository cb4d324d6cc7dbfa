#include "iva/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace iva::kernels {

namespace scalar {

void weighted_outer_acc(cdouble* v, const cdouble* frames, const double* w,
                        std::size_t m, std::size_t n) {
    for (std::size_t t = 0; t < n; ++t) {
        const cdouble* x = frames + t * m;
        const double wt = w[t];
        for (std::size_t i = 0; i < m; ++i) {
            const cdouble yi = wt * x[i];
            cdouble* row = v + i * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += yi * std::conj(x[j]);
        }
    }
}

void matvec_frames(cdouble* out, const cdouble* w, const cdouble* frames,
                   std::size_t m, std::size_t n) {
    for (std::size_t t = 0; t < n; ++t) {
        const cdouble* x = frames + t * m;
        cdouble* y = out + t * m;
        for (std::size_t i = 0; i < m; ++i) {
            const cdouble* row = w + i * m;
            cdouble s{};
            for (std::size_t j = 0; j < m; ++j) s += row[j] * x[j];
            y[i] = s;
        }
    }
}

void window_multiply(double* dst, const double* src, const double* win, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] * win[i];
}

void window_multiply_add(double* dst, const double* src, const double* win, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i] * win[i];
}

} // namespace scalar

const Ops& scalar_ops() {
    static const Ops ops{scalar::weighted_outer_acc, scalar::matvec_frames,
                         scalar::window_multiply, scalar::window_multiply_add, "scalar"};
    return ops;
}

#if !defined(IVA_HAVE_AVX2_KERNELS)
bool avx2_available() { return false; }
const Ops& avx2_ops() { return scalar_ops(); }
#endif

const Ops& active() {
    static const Ops& selected = []() -> const Ops& {
        if (const char* env = std::getenv("IVA_KERNELS")) {
            if (std::strcmp(env, "scalar") == 0) return scalar_ops();
            if (std::strcmp(env, "avx2") == 0) {
                if (!avx2_available())
                    throw std::runtime_error("IVA_KERNELS=avx2 requested but AVX2 is unavailable");
                return avx2_ops();
            }
            throw std::runtime_error(std::string("unknown IVA_KERNELS value: ") + env);
        }
        return avx2_available() ? avx2_ops() : scalar_ops();
    }();
    return selected;
}

} // namespace iva::kernels
