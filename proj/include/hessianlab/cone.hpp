#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "hessianlab/errors.hpp"

namespace hessianlab {

using cdouble = std::complex<double>;

// Absolute tolerance for Hermitian symmetry on construction. Inputs within
// the tolerance are symmetrized, anything worse is rejected.
inline constexpr double kHermitianTol = 1e-12;

// Dense n x n complex Hermitian matrix, row-major. Entries are symmetrized
// on construction so downstream spectral routines always see an exactly
// Hermitian matrix.
class HermitianMatrix {
  public:
    explicit HermitianMatrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {
        if (dim < 1) throw ArgumentError("HermitianMatrix: dim must be >= 1");
    }

    static HermitianMatrix identity(int dim) {
        HermitianMatrix m(dim);
        for (int p = 0; p < dim; ++p) m.a_[p * dim + p] = 1.0;
        return m;
    }

    static HermitianMatrix diagonal(std::span<const double> d) {
        HermitianMatrix m(static_cast<int>(d.size()));
        for (int p = 0; p < m.dim_; ++p) m.a_[p * m.dim_ + p] = d[p];
        return m;
    }

    // Validates symmetry to kHermitianTol (absolute), symmetrizes, and zeroes
    // the imaginary part of the diagonal.
    static HermitianMatrix from_entries(int dim, std::span<const cdouble> row_major);

    int dim() const { return dim_; }

    cdouble operator()(int p, int q) const { return a_[p * dim_ + q]; }

    // Sets entry (p, q) and its conjugate at (q, p).
    void set(int p, int q, cdouble v) {
        a_[p * dim_ + q] = v;
        a_[q * dim_ + p] = std::conj(v);
        if (p == q) a_[p * dim_ + p] = v.real();
    }

    std::span<const cdouble> data() const { return a_; }

    double max_abs() const;

    HermitianMatrix& operator+=(const HermitianMatrix& o);
    HermitianMatrix& operator*=(double s);

    friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
    friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }

    // Adds s to the diagonal.
    void shift(double s) {
        for (int p = 0; p < dim_; ++p) a_[p * dim_ + p] += s;
    }

  private:
    int dim_;
    std::vector<cdouble> a_;
};

struct ConeMargin {
    bool member = false;
    // min over k <= m of S_k(A) / binomial(n, k); positive iff strictly inside.
    double margin = 0.0;
};

double binomial(int n, int k);

// k-th elementary symmetric function of the entries, by the stable prefix
// recurrence (no subset enumeration). S_0 = 1.
double elem_sym(std::span<const double> lambda, int k);

// Ascending eigenvalues of a Hermitian matrix.
std::vector<double> eigenvalues(const HermitianMatrix& a);

// S_k of the spectrum of a, via the eigenvalue route.
double sigma_k(const HermitianMatrix& a, int k);

// Independent route: sum of k x k principal minors (complex LU determinants).
double sigma_k_minor_sum(const HermitianMatrix& a, int k);

// Derivative matrix of S_m in the matrix entries: the (m-1)-th Newton
// transform, T_0 = I, T_k = S_k(A) I - A T_{k-1}.
HermitianMatrix d_matrix(const HermitianMatrix& a, int m);

// Open-cone membership: S_k(A) > 0 for all k = 1..m, with the margin above.
ConeMargin gamma_m_contains(const HermitianMatrix& a, int m);

// tr(A1 D_m(A2)) - m S_m(A1)^{1/m} S_m(A2)^{(m-1)/m}. Requires both inputs
// in the closed cone (S_k >= 0 for k <= m); nonnegative there up to round-off.
// Convention: 0^{1/m} = 0.
double garding_gap(const HermitianMatrix& a1, const HermitianMatrix& a2, int m);

// tr(A D_m(A)) - m S_m(A); identically zero on Hermitian matrices.
double euler_residual(const HermitianMatrix& a, int m);

// Max-norm of D_m(A) A - (D_m(A) A)^dagger; zero since D_m(A) is a
// polynomial in A.
double product_hermiticity_defect(const HermitianMatrix& a, int m);

// All S_0..S_n by closed forms, n <= 3 only. Hot-path companion to sigma_k;
// the two agree to round-off (unit-tested).
std::array<double, 4> sigma_closed_forms(const HermitianMatrix& a);

// min over k = 1..m of sig[k] / binomial(n, k), for sig as above.
double cone_margin_from_sigmas(std::span<const double> sig, int n, int m);

}  // namespace hessianlab
