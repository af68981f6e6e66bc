#include "hessianlab/wedge.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hessianlab/cone.hpp"
#include "hessianlab/errors.hpp"

namespace hessianlab {

namespace {

// Exterior algebra over 2n generators: dz_1..dz_n are bits 0..n-1, the
// conjugates dzb_1..dzb_n are bits n..2n-1. A form is a coefficient per
// monomial bitmask, with generators ordered by ascending bit index.
using Form = std::vector<double>;

int wedge_sign(uint32_t a, uint32_t b) {
    // Parity of transpositions needed to merge the sorted generator lists of
    // a and b into one sorted list.
    int inversions = 0;
    for (uint32_t bit_b = b; bit_b != 0; bit_b &= bit_b - 1) {
        const int j = std::countr_zero(bit_b);
        inversions += std::popcount(a >> (j + 1));
    }
    return (inversions & 1) ? -1 : 1;
}

Form wedge(const Form& f, const Form& g, uint32_t full) {
    Form out(full + 1, 0.0);
    for (uint32_t a = 0; a <= full; ++a) {
        if (f[a] == 0.0) continue;
        for (uint32_t b = 0; b <= full; ++b) {
            if (g[b] == 0.0 || (a & b) != 0) continue;
            out[a | b] += wedge_sign(a, b) * f[a] * g[b];
        }
    }
    return out;
}

// (1,1)-form with diagonal coefficient matrix: sum_p c_p dz_p ^ dzb_p.
// The common scalar (2i per form) cancels in the ratio against beta^n.
Form one_one_diag(int n, std::span<const double> c) {
    const uint32_t full = (1u << (2 * n)) - 1;
    Form f(full + 1, 0.0);
    for (int p = 0; p < n; ++p) f[(1u << p) | (1u << (n + p))] = c[p];
    return f;
}

}  // namespace

double wedge_normalization(int n, int m) {
    if (n < 1 || m < 1 || m > n) throw ArgumentError("wedge_normalization: need 1 <= m <= n");
    if (n > 3) throw ArgumentError("wedge_normalization: n > 3 unsupported (oracle cost)");

    const uint32_t full = (1u << (2 * n)) - 1;
    const std::array<std::array<double, 3>, 2> samples{{{1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}}};
    std::array<double, 3> ones{1.0, 1.0, 1.0};
    const Form beta = one_one_diag(n, {ones.data(), static_cast<size_t>(n)});

    Form beta_n(full + 1, 0.0);
    beta_n[0] = 1.0;
    for (int i = 0; i < n; ++i) beta_n = wedge(beta_n, beta, full);
    const double beta_top = beta_n[full];

    double kappa = 0.0;
    for (size_t s = 0; s < samples.size(); ++s) {
        const std::span<const double> lambda{samples[s].data(), static_cast<size_t>(n)};
        const Form ddc = one_one_diag(n, lambda);
        Form w(full + 1, 0.0);
        w[0] = 1.0;
        for (int i = 0; i < m; ++i) w = wedge(w, ddc, full);
        for (int i = 0; i < n - m; ++i) w = wedge(w, beta, full);
        const double sm = elem_sym(lambda, m);
        const double k = w[full] / (sm * beta_top);
        if (s == 0) kappa = k;
        else if (std::abs(k - kappa) > 1e-13 * std::abs(kappa))
            throw ValidationError("wedge_normalization: ratio not constant across spectra");
    }
    return kappa;
}

}  // namespace hessianlab
