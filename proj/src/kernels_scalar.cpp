#include "hessianlab/kernels.hpp"

#include <cmath>

namespace hessianlab::kern {

double sigma_shift(int n, int k, const double* sig, double c) {
    // binom(n-j, k-j) for the small n used here; falls back to the generic
    // product form when needed.
    auto binom = [](int a, int b) -> double {
        if (b < 0 || b > a) return 0.0;
        double r = 1.0;
        for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return r;
    };
    double acc = 0.0;
    double cp = 1.0;  // c^{k-j}, built from j = k downwards
    for (int j = k; j >= 0; --j) {
        acc += binom(n - j, k - j) * sig[j] * cp;
        cp *= c;
    }
    return acc;
}

namespace {

void hess_fields_n2_scalar(const Grid4& g, const double* u, double* a11, double* a22,
                           double* r12, double* i12) {
    for (int i0 = 1; i0 < g.s[0] - 1; ++i0)
        for (int i1 = 1; i1 < g.s[1] - 1; ++i1)
            for (int i2 = 1; i2 < g.s[2] - 1; ++i2) {
                size_t f = i0 * g.st[0] + i1 * g.st[1] + i2 * g.st[2] + 1;
                for (int i3 = 1; i3 < g.s[3] - 1; ++i3, ++f) {
                    const Hess2 h = hess2_at(u, f, g);
                    a11[f] = h.a11;
                    a22[f] = h.a22;
                    r12[f] = h.r12;
                    i12[f] = h.i12;
                }
            }
}

void jacobi_sweep_n2_scalar(const Grid4& g, const double* w, double* w_next,
                            const double* c11, const double* c22, const double* cr12,
                            const double* ci12, const double* step, const double* rhs) {
    const size_t total = static_cast<size_t>(g.s[0]) * g.st[0];
    for (size_t f = 0; f < total; ++f) w_next[f] = w[f];
    const size_t s0 = g.st[0], s1 = g.st[1], s2 = g.st[2], s3 = g.st[3];
    const double q = 0.25 * g.inv_h2;
    const double qc = 0.0625 * g.inv_h2;
    for (int i0 = 1; i0 < g.s[0] - 1; ++i0)
        for (int i1 = 1; i1 < g.s[1] - 1; ++i1)
            for (int i2 = 1; i2 < g.s[2] - 1; ++i2) {
                size_t f = i0 * s0 + i1 * s1 + i2 * s2 + 1;
                for (int i3 = 1; i3 < g.s[3] - 1; ++i3, ++f) {
                    const double c = w[f];
                    const double h11 = q * (w[f + s0] + w[f - s0] + w[f + s1] + w[f - s1] - 4.0 * c);
                    const double h22 = q * (w[f + s2] + w[f - s2] + w[f + s3] + w[f - s3] - 4.0 * c);
                    const double x1x2 = w[f + s0 + s2] - w[f + s0 - s2] - w[f - s0 + s2] + w[f - s0 - s2];
                    const double y1y2 = w[f + s1 + s3] - w[f + s1 - s3] - w[f - s1 + s3] + w[f - s1 - s3];
                    const double x1y2 = w[f + s0 + s3] - w[f + s0 - s3] - w[f - s0 + s3] + w[f - s0 - s3];
                    const double y1x2 = w[f + s1 + s2] - w[f + s1 - s2] - w[f - s1 + s2] + w[f - s1 - s2];
                    const double hr = qc * (x1x2 + y1y2);
                    const double hi = qc * (x1y2 - y1x2);
                    const double lw = c11[f] * h11 + c22[f] * h22 + 2.0 * (cr12[f] * hr + ci12[f] * hi);
                    w_next[f] = c + step[f] * (rhs[f] - lw);
                }
            }
}

double reduce_max_abs_masked_scalar(const double* x, const uint8_t* mask, size_t count) {
    double r = 0.0;
    for (size_t i = 0; i < count; ++i)
        if (mask[i]) r = std::max(r, std::fabs(x[i]));
    return r;
}

}  // namespace

const KernelOps& scalar_ops() {
    static const KernelOps k{hess_fields_n2_scalar, jacobi_sweep_n2_scalar,
                             reduce_max_abs_masked_scalar, "scalar"};
    return k;
}

}  // namespace hessianlab::kern
