#pragma once

#include <cstddef>
#include <cstdint>

namespace hessianlab::kern {

// Geometry of a 4D (n = 2) grid for the strided fast paths. st[3] == 1.
struct Grid4 {
    int s[4];
    size_t st[4];
    double inv_h2;  // 1 / h^2
};

// Discrete complex Hessian entries at one point of a 4D grid, all neighbors
// read through precomputed strides (caller guarantees a full stencil).
struct Hess2 {
    double a11, a22, r12, i12;
};

inline Hess2 hess2_at(const double* u, size_t f, const Grid4& g) {
    const size_t s0 = g.st[0], s1 = g.st[1], s2 = g.st[2], s3 = g.st[3];
    const double c = u[f];
    const double q = 0.25 * g.inv_h2;
    Hess2 h;
    h.a11 = q * (u[f + s0] + u[f - s0] + u[f + s1] + u[f - s1] - 4.0 * c);
    h.a22 = q * (u[f + s2] + u[f - s2] + u[f + s3] + u[f - s3] - 4.0 * c);
    const double qc = 0.0625 * g.inv_h2;  // 1/(4h^2) * 1/4
    const double x1x2 = u[f + s0 + s2] - u[f + s0 - s2] - u[f - s0 + s2] + u[f - s0 - s2];
    const double y1y2 = u[f + s1 + s3] - u[f + s1 - s3] - u[f - s1 + s3] + u[f - s1 - s3];
    const double x1y2 = u[f + s0 + s3] - u[f + s0 - s3] - u[f - s0 + s3] + u[f - s0 - s3];
    const double y1x2 = u[f + s1 + s2] - u[f + s1 - s2] - u[f - s1 + s2] + u[f - s1 - s2];
    h.r12 = qc * (x1x2 + y1y2);
    h.i12 = qc * (x1y2 - y1x2);
    return h;
}

inline double sigma1_2(const Hess2& h) { return h.a11 + h.a22; }
inline double sigma2_2(const Hess2& h) { return h.a11 * h.a22 - h.r12 * h.r12 - h.i12 * h.i12; }

// S_k(A + c I) = sum_j binom(n-j, k-j) S_j(A) c^{k-j}; sig[j] = S_j(A),
// sig[0] = 1. Supports n <= 3.
double sigma_shift(int n, int k, const double* sig, double c);

// Function table for the data-parallel field kernels. One scalar reference
// implementation plus an AVX/FMA variant selected at runtime; both compute
// over the full inner index box [1, s-2]^4 and leave the boundary shell
// untouched (callers apply interior masks to the results).
struct KernelOps {
    // Hessian entry fields of u.
    void (*hess_fields_n2)(const Grid4& g, const double* u, double* a11, double* a22,
                           double* r12, double* i12);
    // One damped-Jacobi sweep for the linearized operator
    //   (L w)(x) = c11 Hw11 + c22 Hw22 + 2 cr12 ReHw12 + 2 ci12 ImHw12:
    //   w_next = w + step * (rhs - L w),  step = relax * mask / diag.
    // Boundary shell is copied through.
    void (*jacobi_sweep_n2)(const Grid4& g, const double* w, double* w_next,
                            const double* c11, const double* c22, const double* cr12,
                            const double* ci12, const double* step, const double* rhs);
    // max over i with mask[i] != 0 of |x[i]|; 0 when the mask is empty.
    double (*reduce_max_abs_masked)(const double* x, const uint8_t* mask, size_t count);
    const char* name;
};

// Implementation selected for this process (AVX+FMA when the CPU has it).
const KernelOps& ops();
// Reference implementation, always available; equivalence tests compare
// against it.
const KernelOps& scalar_ops();
// Null when the build or CPU lacks the vector path.
const KernelOps* simd_ops();

}  // namespace hessianlab::kern
