#pragma once

namespace hessianlab {

// kappa(n, m) such that (dd^c u)^m wedge beta^{n-m} = kappa * S_m(lambda) * beta^n
// for u = sum lambda_p |z_p|^2 and the Euclidean form beta = dd^c |z|^2.
// Computed by exterior-algebra expansion over anticommuting generators, not
// from a closed-form assumption. Supported for 1 <= m <= n <= 3.
double wedge_normalization(int n, int m);

}  // namespace hessianlab
