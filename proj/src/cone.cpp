#include "hessianlab/cone.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace hessianlab {

namespace {

Eigen::MatrixXcd to_eigen(const HermitianMatrix& a) {
    const int n = a.dim();
    Eigen::MatrixXcd m(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) m(p, q) = a(p, q);
    return m;
}

void check_k_range(int n, int k) {
    if (k < 0 || k > n) throw ArgumentError("sigma index k out of range [0, n]");
}

void check_m_range(int n, int m) {
    if (m < 1 || m > n) throw ArgumentError("degree m out of range [1, n]");
}

// Matrix product helper kept local; results are re-wrapped as Hermitian only
// when that is an invariant of the operation.
std::vector<cdouble> mat_mul(int n, std::span<const cdouble> a, std::span<const cdouble> b) {
    std::vector<cdouble> c(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cdouble aik = a[i * n + k];
            if (aik == cdouble(0.0, 0.0)) continue;
            for (int j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
        }
    return c;
}

double trace_product(int n, std::span<const cdouble> a, std::span<const cdouble> b) {
    // tr(AB) for Hermitian A, B is real.
    cdouble t = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) t += a[i * n + k] * b[k * n + i];
    return t.real();
}

}  // namespace

HermitianMatrix HermitianMatrix::from_entries(int dim, std::span<const cdouble> row_major) {
    if (static_cast<int>(row_major.size()) != dim * dim)
        throw ArgumentError("HermitianMatrix::from_entries: size mismatch");
    for (int p = 0; p < dim; ++p)
        for (int q = p; q < dim; ++q) {
            const cdouble d = row_major[p * dim + q] - std::conj(row_major[q * dim + p]);
            if (std::abs(d) > kHermitianTol)
                throw ValidationError("HermitianMatrix: symmetry violated beyond tolerance");
        }
    HermitianMatrix m(dim);
    for (int p = 0; p < dim; ++p) {
        m.a_[p * dim + p] = row_major[p * dim + p].real();
        for (int q = p + 1; q < dim; ++q) {
            const cdouble v = 0.5 * (row_major[p * dim + q] + std::conj(row_major[q * dim + p]));
            m.a_[p * dim + q] = v;
            m.a_[q * dim + p] = std::conj(v);
        }
    }
    return m;
}

double HermitianMatrix::max_abs() const {
    double r = 0.0;
    for (const cdouble& v : a_) r = std::max(r, std::abs(v));
    return r;
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& o) {
    if (o.dim_ != dim_) throw ArgumentError("HermitianMatrix: dimension mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

HermitianMatrix& HermitianMatrix::operator*=(double s) {
    for (cdouble& v : a_) v *= s;
    return *this;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double elem_sym(std::span<const double> lambda, int k) {
    const int n = static_cast<int>(lambda.size());
    if (n < 1) throw ArgumentError("elem_sym: empty spectrum");
    check_k_range(n, k);
    for (double v : lambda)
        if (!std::isfinite(v)) throw ValidationError("elem_sym: non-finite eigenvalue");
    if (k == 0) return 1.0;
    // e_j over a growing prefix: e_j <- e_j + lambda * e_{j-1}, j descending.
    std::vector<double> e(static_cast<size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    for (double v : lambda)
        for (int j = std::min(k, n); j >= 1; --j) e[j] += v * e[j - 1];
    return e[k];
}

std::vector<double> eigenvalues(const HermitianMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(a), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ValidationError("eigenvalues: solver failed");
    const auto& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

double sigma_k(const HermitianMatrix& a, int k) {
    check_k_range(a.dim(), k);
    if (k == 0) return 1.0;
    const std::vector<double> ev = eigenvalues(a);
    return elem_sym(ev, k);
}

double sigma_k_minor_sum(const HermitianMatrix& a, int k) {
    const int n = a.dim();
    check_k_range(n, k);
    if (k == 0) return 1.0;

    // Determinant of the principal submatrix on rows/cols `idx` via complex
    // LU with partial pivoting. Sizes are tiny (k <= n <= ~8).
    auto minor_det = [&](std::span<const int> idx) -> double {
        const int s = static_cast<int>(idx.size());
        std::vector<cdouble> lu(static_cast<size_t>(s) * s);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) lu[i * s + j] = a(idx[i], idx[j]);
        cdouble det = 1.0;
        for (int c = 0; c < s; ++c) {
            int piv = c;
            double best = std::abs(lu[c * s + c]);
            for (int r = c + 1; r < s; ++r) {
                const double v = std::abs(lu[r * s + c]);
                if (v > best) { best = v; piv = r; }
            }
            if (best == 0.0) return 0.0;
            if (piv != c) {
                for (int j = 0; j < s; ++j) std::swap(lu[c * s + j], lu[piv * s + j]);
                det = -det;
            }
            det *= lu[c * s + c];
            for (int r = c + 1; r < s; ++r) {
                const cdouble factor = lu[r * s + c] / lu[c * s + c];
                for (int j = c + 1; j < s; ++j) lu[r * s + j] -= factor * lu[c * s + j];
            }
        }
        return det.real();
    };

    double sum = 0.0;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        sum += minor_det(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return sum;
}

HermitianMatrix d_matrix(const HermitianMatrix& a, int m) {
    const int n = a.dim();
    check_m_range(n, m);
    // T_0 = I, T_k = S_k(a) I - a T_{k-1}; D_m(a) = T_{m-1}.
    std::vector<cdouble> t(static_cast<size_t>(n) * n);
    for (int p = 0; p < n; ++p) t[p * n + p] = 1.0;
    for (int k = 1; k <= m - 1; ++k) {
        const double sk = sigma_k(a, k);
        std::vector<cdouble> at = mat_mul(n, a.data(), t);
        for (int i = 0; i < n * n; ++i) t[i] = -at[i];
        for (int p = 0; p < n; ++p) t[p * n + p] += sk;
    }
    return HermitianMatrix::from_entries(n, t);
}

ConeMargin gamma_m_contains(const HermitianMatrix& a, int m) {
    const int n = a.dim();
    check_m_range(n, m);
    const std::vector<double> ev = eigenvalues(a);
    ConeMargin cm;
    cm.margin = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= m; ++k)
        cm.margin = std::min(cm.margin, elem_sym(ev, k) / binomial(n, k));
    cm.member = cm.margin > 0.0;
    return cm;
}

double garding_gap(const HermitianMatrix& a1, const HermitianMatrix& a2, int m) {
    const int n = a1.dim();
    check_m_range(n, m);
    if (a2.dim() != n) throw ArgumentError("garding_gap: dimension mismatch");
    // The inequality is claimed on the closed cone only.
    const double closed_tol = 1e-10;
    for (const HermitianMatrix* a : {&a1, &a2}) {
        const std::vector<double> ev = eigenvalues(*a);
        for (int k = 1; k <= m; ++k) {
            const double sk = elem_sym(ev, k);
            if (sk < -closed_tol * binomial(n, k))
                throw ArgumentError("garding_gap: input outside the closed cone");
        }
    }
    auto root = [](double v, double e) { return v <= 0.0 ? 0.0 : std::pow(v, e); };
    const double s1 = std::max(sigma_k(a1, m), 0.0);
    const double s2 = std::max(sigma_k(a2, m), 0.0);
    const double lhs = trace_product(n, a1.data(), d_matrix(a2, m).data());
    return lhs - m * root(s1, 1.0 / m) * root(s2, (m - 1.0) / m);
}

double euler_residual(const HermitianMatrix& a, int m) {
    const int n = a.dim();
    check_m_range(n, m);
    return trace_product(n, a.data(), d_matrix(a, m).data()) - m * sigma_k(a, m);
}

double product_hermiticity_defect(const HermitianMatrix& a, int m) {
    const int n = a.dim();
    check_m_range(n, m);
    const HermitianMatrix d = d_matrix(a, m);
    const std::vector<cdouble> prod = mat_mul(n, d.data(), a.data());
    double defect = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            defect = std::max(defect, std::abs(prod[p * n + q] - std::conj(prod[q * n + p])));
    return defect;
}

std::array<double, 4> sigma_closed_forms(const HermitianMatrix& a) {
    const int n = a.dim();
    if (n > 3) throw ArgumentError("sigma_closed_forms: n must be <= 3");
    std::array<double, 4> sig{1.0, 0.0, 0.0, 0.0};
    const double d0 = a(0, 0).real();
    if (n == 1) {
        sig[1] = d0;
        return sig;
    }
    const double d1 = a(1, 1).real();
    const cdouble a01 = a(0, 1);
    if (n == 2) {
        sig[1] = d0 + d1;
        sig[2] = d0 * d1 - std::norm(a01);
        return sig;
    }
    const double d2 = a(2, 2).real();
    const cdouble a02 = a(0, 2), a12 = a(1, 2);
    sig[1] = d0 + d1 + d2;
    sig[2] = d0 * d1 + d0 * d2 + d1 * d2 - std::norm(a01) - std::norm(a02) - std::norm(a12);
    sig[3] = d0 * d1 * d2 - d0 * std::norm(a12) - d1 * std::norm(a02) - d2 * std::norm(a01) +
             2.0 * (a01 * a12 * std::conj(a02)).real();
    return sig;
}

double cone_margin_from_sigmas(std::span<const double> sig, int n, int m) {
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= m; ++k) margin = std::min(margin, sig[k] / binomial(n, k));
    return margin;
}

}  // namespace hessianlab
