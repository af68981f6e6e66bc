#include "hessianlab/validate.hpp"

#include <algorithm>
#include <cmath>

namespace hessianlab {

namespace {

void record(ViolationReport& rep, const GridField& g, size_t fl, ViolationKind kind,
            double magnitude) {
    Violation v;
    g.unflatten(fl, {v.index.data(), static_cast<size_t>(g.axes())});
    v.kind = kind;
    v.magnitude = magnitude;
    rep.violations.push_back(v);
    rep.worst = std::max(rep.worst, magnitude);
}

bool point_checked(const GridField& u, size_t fl, std::span<int> idx) {
    u.unflatten(fl, {idx.data(), idx.size()});
    if (u.has_mask()) return u.interior(fl);
    return u.full_stencil({idx.data(), idx.size()});
}

}  // namespace

ViolationReport viscosity_check(const GridField& u, int m, double tol, double omega_shift) {
    if (m < 1 || m > u.n()) throw ArgumentError("viscosity_check: m out of range");
    ViolationReport rep;
    const int d = u.axes();
    std::array<int, 6> idx{};
    for (size_t fl = 0; fl < u.size(); ++fl) {
        if (!point_checked(u, fl, {idx.data(), static_cast<size_t>(d)})) continue;
        HermitianMatrix h = complex_hessian(u, {idx.data(), static_cast<size_t>(d)});
        if (omega_shift != 0.0) h.shift(omega_shift);
        const auto sig = sigma_closed_forms(h);
        double worst = 0.0;
        for (int k = 1; k <= m; ++k) worst = std::max(worst, -sig[k]);
        if (worst > tol) record(rep, u, fl, ViolationKind::cone, worst);
    }
    rep.pass = rep.worst <= tol;
    return rep;
}

ViolationReport comparison_check(const GridField& u, const GridField& v, const GridField& fu,
                                 const GridField& fv, int m, double tol) {
    if (!u.same_grid(v) || !u.same_grid(fu) || !u.same_grid(fv))
        throw ArgumentError("comparison_check: grid mismatch");
    if (m < 1 || m > u.n()) throw ArgumentError("comparison_check: m out of range");
    ViolationReport rep;
    const int d = u.axes();
    std::array<int, 6> idx{};

    // Hypotheses: ordered right-hand sides on the interior, ordering of the
    // fields on the collar.
    for (size_t fl = 0; fl < u.size(); ++fl) {
        const bool inside = point_checked(u, fl, {idx.data(), static_cast<size_t>(d)});
        if (inside) {
            if (fu[fl] < fv[fl] - tol) {
                rep.precondition_met = false;
                rep.note = "fu >= fv fails on the interior";
                break;
            }
        } else {
            if (u[fl] > v[fl] + tol) {
                rep.precondition_met = false;
                rep.note = "u <= v fails on the collar";
                break;
            }
        }
    }
    if (!rep.precondition_met) {
        rep.pass = false;
        return rep;
    }
    for (size_t fl = 0; fl < u.size(); ++fl) {
        if (!point_checked(u, fl, {idx.data(), static_cast<size_t>(d)})) continue;
        const double excess = u[fl] - v[fl] - tol;
        if (excess > 0.0) record(rep, u, fl, ViolationKind::comparison, excess + tol);
    }
    rep.pass = rep.violations.empty();
    return rep;
}

ViolationReport sandwich_check(const GridField& u, const GridField& psi, double h, double tol) {
    if (!u.same_grid(psi)) throw ArgumentError("sandwich_check: grid mismatch");
    ViolationReport rep;
    for (size_t fl = 0; fl < u.size(); ++fl) {
        const double below = u[fl] - tol - psi[fl];          // psi too small
        const double above = psi[fl] - (u[fl] + h + tol);    // psi too large
        const double mag = std::max(below, above);
        if (mag > 0.0) record(rep, u, fl, ViolationKind::sandwich, mag);
    }
    rep.pass = rep.violations.empty();
    return rep;
}

}  // namespace hessianlab
