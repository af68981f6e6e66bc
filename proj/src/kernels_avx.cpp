// AVX + FMA variants of the field kernels. This translation unit is compiled
// with -mavx -mfma; callers reach it only through the runtime dispatch in
// kernels.cpp, which checks CPU support first.

#include "hessianlab/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace hessianlab::kern {

namespace {

inline __m256d cross4(const double* w, size_t f, size_t sa, size_t sb) {
    const __m256d pp = _mm256_loadu_pd(w + f + sa + sb);
    const __m256d pm = _mm256_loadu_pd(w + f + sa - sb);
    const __m256d mp = _mm256_loadu_pd(w + f - sa + sb);
    const __m256d mm = _mm256_loadu_pd(w + f - sa - sb);
    return _mm256_add_pd(_mm256_sub_pd(pp, pm), _mm256_sub_pd(mm, mp));
}

void hess_fields_n2_avx(const Grid4& g, const double* u, double* a11, double* a22,
                        double* r12, double* i12) {
    const size_t s0 = g.st[0], s1 = g.st[1], s2 = g.st[2], s3 = g.st[3];
    const __m256d q = _mm256_set1_pd(0.25 * g.inv_h2);
    const __m256d qc = _mm256_set1_pd(0.0625 * g.inv_h2);
    const __m256d four = _mm256_set1_pd(4.0);
    const int last = g.s[3] - 1;
    for (int i0 = 1; i0 < g.s[0] - 1; ++i0)
        for (int i1 = 1; i1 < g.s[1] - 1; ++i1)
            for (int i2 = 1; i2 < g.s[2] - 1; ++i2) {
                const size_t base = i0 * s0 + i1 * s1 + i2 * s2;
                int i3 = 1;
                for (; i3 + 3 < last; i3 += 4) {
                    const size_t f = base + i3;
                    const __m256d c = _mm256_loadu_pd(u + f);
                    __m256d ax = _mm256_add_pd(_mm256_loadu_pd(u + f + s0), _mm256_loadu_pd(u + f - s0));
                    ax = _mm256_add_pd(ax, _mm256_add_pd(_mm256_loadu_pd(u + f + s1), _mm256_loadu_pd(u + f - s1)));
                    __m256d ay = _mm256_add_pd(_mm256_loadu_pd(u + f + s2), _mm256_loadu_pd(u + f - s2));
                    ay = _mm256_add_pd(ay, _mm256_add_pd(_mm256_loadu_pd(u + f + s3), _mm256_loadu_pd(u + f - s3)));
                    const __m256d c4 = _mm256_mul_pd(four, c);
                    _mm256_storeu_pd(a11 + f, _mm256_mul_pd(q, _mm256_sub_pd(ax, c4)));
                    _mm256_storeu_pd(a22 + f, _mm256_mul_pd(q, _mm256_sub_pd(ay, c4)));
                    const __m256d x1x2 = cross4(u, f, s0, s2);
                    const __m256d y1y2 = cross4(u, f, s1, s3);
                    const __m256d x1y2 = cross4(u, f, s0, s3);
                    const __m256d y1x2 = cross4(u, f, s1, s2);
                    _mm256_storeu_pd(r12 + f, _mm256_mul_pd(qc, _mm256_add_pd(x1x2, y1y2)));
                    _mm256_storeu_pd(i12 + f, _mm256_mul_pd(qc, _mm256_sub_pd(x1y2, y1x2)));
                }
                for (; i3 < last; ++i3) {
                    const size_t f = base + i3;
                    const Hess2 h = hess2_at(u, f, g);
                    a11[f] = h.a11;
                    a22[f] = h.a22;
                    r12[f] = h.r12;
                    i12[f] = h.i12;
                }
            }
}

void jacobi_sweep_n2_avx(const Grid4& g, const double* w, double* w_next,
                         const double* c11, const double* c22, const double* cr12,
                         const double* ci12, const double* step, const double* rhs) {
    const size_t total = static_cast<size_t>(g.s[0]) * g.st[0];
    size_t i = 0;
    for (; i + 3 < total; i += 4) _mm256_storeu_pd(w_next + i, _mm256_loadu_pd(w + i));
    for (; i < total; ++i) w_next[i] = w[i];

    const size_t s0 = g.st[0], s1 = g.st[1], s2 = g.st[2], s3 = g.st[3];
    const __m256d q = _mm256_set1_pd(0.25 * g.inv_h2);
    const __m256d qc = _mm256_set1_pd(0.0625 * g.inv_h2);
    const __m256d four = _mm256_set1_pd(4.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const int last = g.s[3] - 1;
    for (int i0 = 1; i0 < g.s[0] - 1; ++i0)
        for (int i1 = 1; i1 < g.s[1] - 1; ++i1)
            for (int i2 = 1; i2 < g.s[2] - 1; ++i2) {
                const size_t base = i0 * s0 + i1 * s1 + i2 * s2;
                int i3 = 1;
                for (; i3 + 3 < last; i3 += 4) {
                    const size_t f = base + i3;
                    const __m256d c = _mm256_loadu_pd(w + f);
                    __m256d ax = _mm256_add_pd(_mm256_loadu_pd(w + f + s0), _mm256_loadu_pd(w + f - s0));
                    ax = _mm256_add_pd(ax, _mm256_add_pd(_mm256_loadu_pd(w + f + s1), _mm256_loadu_pd(w + f - s1)));
                    __m256d ay = _mm256_add_pd(_mm256_loadu_pd(w + f + s2), _mm256_loadu_pd(w + f - s2));
                    ay = _mm256_add_pd(ay, _mm256_add_pd(_mm256_loadu_pd(w + f + s3), _mm256_loadu_pd(w + f - s3)));
                    const __m256d c4 = _mm256_mul_pd(four, c);
                    const __m256d h11 = _mm256_mul_pd(q, _mm256_sub_pd(ax, c4));
                    const __m256d h22 = _mm256_mul_pd(q, _mm256_sub_pd(ay, c4));
                    const __m256d hr = _mm256_mul_pd(qc, _mm256_add_pd(cross4(w, f, s0, s2), cross4(w, f, s1, s3)));
                    const __m256d hi = _mm256_mul_pd(qc, _mm256_sub_pd(cross4(w, f, s0, s3), cross4(w, f, s1, s2)));
                    __m256d lw = _mm256_mul_pd(_mm256_loadu_pd(c11 + f), h11);
                    lw = _mm256_fmadd_pd(_mm256_loadu_pd(c22 + f), h22, lw);
                    __m256d lc = _mm256_mul_pd(_mm256_loadu_pd(cr12 + f), hr);
                    lc = _mm256_fmadd_pd(_mm256_loadu_pd(ci12 + f), hi, lc);
                    lw = _mm256_fmadd_pd(two, lc, lw);
                    const __m256d upd = _mm256_mul_pd(_mm256_loadu_pd(step + f),
                                                      _mm256_sub_pd(_mm256_loadu_pd(rhs + f), lw));
                    _mm256_storeu_pd(w_next + f, _mm256_add_pd(c, upd));
                }
                for (; i3 < last; ++i3) {
                    const size_t f = base + i3;
                    const double cv = w[f];
                    const Hess2 h = hess2_at(w, f, g);
                    const double lw = c11[f] * h.a11 + c22[f] * h.a22 + 2.0 * (cr12[f] * h.r12 + ci12[f] * h.i12);
                    w_next[f] = cv + step[f] * (rhs[f] - lw);
                }
            }
}

double reduce_max_abs_masked_avx(const double* x, const uint8_t* mask, size_t count) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d best = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 3 < count; i += 4) {
        const __m256d m = _mm256_set_pd(mask[i + 3] ? 1.0 : 0.0, mask[i + 2] ? 1.0 : 0.0,
                                        mask[i + 1] ? 1.0 : 0.0, mask[i] ? 1.0 : 0.0);
        const __m256d v = _mm256_andnot_pd(signmask, _mm256_loadu_pd(x + i));
        best = _mm256_max_pd(best, _mm256_mul_pd(v, m));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, best);
    double r = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < count; ++i)
        if (mask[i]) r = std::max(r, std::fabs(x[i]));
    return r;
}

}  // namespace

const KernelOps* avx_ops_table() {
    static const KernelOps k{hess_fields_n2_avx, jacobi_sweep_n2_avx, reduce_max_abs_masked_avx,
                             "avx-fma"};
    return &k;
}

}  // namespace hessianlab::kern

#else

namespace hessianlab::kern {
const KernelOps* avx_ops_table() { return nullptr; }
}  // namespace hessianlab::kern

#endif
