#include "hessianlab/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "hessianlab/kernels.hpp"

namespace hessianlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Offsets read by the discrete Hessian: axis +-1 plus the +-1/+-1 cross pairs.
bool stencil_fits_mask(const GridField& g, std::span<const uint8_t> mask,
                       std::span<const int> idx) {
    const int d = g.axes();
    std::array<int, 6> nb{};
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b)
            for (int da : {-1, 1})
                for (int db : {-1, 1}) {
                    if (a == b && da != db) continue;
                    for (int x = 0; x < d; ++x) nb[x] = idx[x];
                    nb[a] += da;
                    if (b != a) nb[b] += db;
                    bool inside = true;
                    for (int x = 0; x < d; ++x)
                        if (nb[x] < 0 || nb[x] >= g.shape(x)) inside = false;
                    if (!inside) return false;
                    if (!mask[g.flat_index({nb.data(), static_cast<size_t>(d)})]) return false;
                }
    return true;
}

// Per-solve context: strided views, interior mask, and Hessian-entry fields.
struct Ctx {
    const GridField* grid = nullptr;  // geometry reference (rho)
    int n = 0, m = 0;
    double h = 0.0, inv_h2 = 0.0;
    size_t npts = 0;
    std::array<int, 6> shape{};
    std::array<size_t, 6> strides{};
    std::vector<uint8_t> mask;
    std::vector<size_t> interior;  // flat indices, lexicographic
    kern::Grid4 g4{};

    // Hessian entry fields: diag per p, off-diagonals per pair (01, 02, 12).
    std::array<std::vector<double>, 3> hd, hre, him;

    void bind(const GridField& geom, int m_in) {
        grid = &geom;
        n = geom.n();
        m = m_in;
        h = geom.spacing();
        inv_h2 = 1.0 / (h * h);
        npts = geom.size();
        for (int a = 0; a < 2 * n; ++a) {
            shape[a] = geom.shape(a);
            strides[a] = geom.stride(a);
        }
        if (geom.has_mask()) {
            mask.assign(geom.mask().begin(), geom.mask().end());
        } else {
            // No explicit mask: every full-stencil point counts as interior.
            mask.assign(npts, 0);
            std::array<int, 6> idx{};
            for (size_t f = 0; f < npts; ++f) {
                geom.unflatten(f, {idx.data(), static_cast<size_t>(2 * n)});
                if (geom.full_stencil({idx.data(), static_cast<size_t>(2 * n)})) mask[f] = 1;
            }
        }
        interior.clear();
        for (size_t f = 0; f < npts; ++f)
            if (mask[f]) interior.push_back(f);
        if (n == 2) {
            for (int a = 0; a < 4; ++a) {
                g4.s[a] = shape[a];
                g4.st[a] = strides[a];
            }
            g4.inv_h2 = inv_h2;
        }
        const int pairs = n * (n - 1) / 2;
        for (int p = 0; p < n; ++p) hd[p].assign(npts, 0.0);
        for (int q = 0; q < pairs; ++q) {
            hre[q].assign(npts, 0.0);
            him[q].assign(npts, 0.0);
        }
        for (int k = 1; k <= n; ++k) binom_tab[k] = binomial(n, k);
    }

    void compute_hessians(const double* u) {
        if (n == 2) {
            kern::ops().hess_fields_n2(g4, u, hd[0].data(), hd[1].data(), hre[0].data(),
                                       him[0].data());
            return;
        }
        // Generic scalar path (n = 1 or 3): strided reads over the inner box.
        const int d = 2 * n;
        std::array<int, 6> idx{};
        for (size_t f : interior) {
            grid->unflatten(f, {idx.data(), static_cast<size_t>(d)});
            bool ok = true;
            for (int a = 0; a < d; ++a)
                if (idx[a] < 1 || idx[a] > shape[a] - 2) ok = false;
            if (!ok) continue;
            const double q = 0.25 * inv_h2;
            const double qc = 0.0625 * inv_h2;
            const double c = u[f];
            for (int p = 0; p < n; ++p) {
                const size_t sx = strides[2 * p], sy = strides[2 * p + 1];
                hd[p][f] = q * (u[f + sx] + u[f - sx] + u[f + sy] + u[f - sy] - 4.0 * c);
            }
            auto cross = [&](size_t sa, size_t sb) {
                return u[f + sa + sb] - u[f + sa - sb] - u[f - sa + sb] + u[f - sa - sb];
            };
            int pair = 0;
            for (int p = 0; p < n; ++p)
                for (int qq = p + 1; qq < n; ++qq, ++pair) {
                    const size_t xp = strides[2 * p], yp = strides[2 * p + 1];
                    const size_t xq = strides[2 * qq], yq = strides[2 * qq + 1];
                    hre[pair][f] = qc * (cross(xp, xq) + cross(yp, yq));
                    him[pair][f] = qc * (cross(xp, yq) - cross(yp, xq));
                }
        }
    }

    double binom_tab[4] = {1.0, 1.0, 1.0, 1.0};

    // S_0..S_n at a computed point.
    void sigmas(size_t f, double* sig) const {
        sig[0] = 1.0;
        if (n == 1) {
            sig[1] = hd[0][f];
            return;
        }
        if (n == 2) {
            const double d0 = hd[0][f], d1 = hd[1][f];
            sig[1] = d0 + d1;
            sig[2] = d0 * d1 - hre[0][f] * hre[0][f] - him[0][f] * him[0][f];
            return;
        }
        const double d0 = hd[0][f], d1 = hd[1][f], d2 = hd[2][f];
        const double n01 = hre[0][f] * hre[0][f] + him[0][f] * him[0][f];
        const double n02 = hre[1][f] * hre[1][f] + him[1][f] * him[1][f];
        const double n12 = hre[2][f] * hre[2][f] + him[2][f] * him[2][f];
        sig[1] = d0 + d1 + d2;
        sig[2] = d0 * d1 + d0 * d2 + d1 * d2 - n01 - n02 - n12;
        const double tripr = (hre[0][f] * hre[2][f] - him[0][f] * him[2][f]) * hre[1][f] +
                             (hre[0][f] * him[2][f] + him[0][f] * hre[2][f]) * him[1][f];
        sig[3] = d0 * d1 * d2 - d0 * n12 - d1 * n02 - d2 * n01 + 2.0 * tripr;
    }

    double margin_from(const double* sig) const {
        double mg = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= m; ++k) mg = std::min(mg, sig[k] / binom_tab[k]);
        return mg;
    }
};

struct EvalStats {
    double max_res = 0.0;     // max |S_m - f|
    double max_root_res = 0.0;  // max |S_m^{1/m} - f^{1/m}|
    double min_margin = std::numeric_limits<double>::infinity();
};

double nth_root(double v, int m) { return v <= 0.0 ? 0.0 : std::pow(v, 1.0 / m); }

EvalStats evaluate(Ctx& ctx, const double* u, const double* f) {
    ctx.compute_hessians(u);
    EvalStats st;
    double sig[4];
    for (size_t fl : ctx.interior) {
        ctx.sigmas(fl, sig);
        const double r = sig[ctx.m] - f[fl];
        st.max_res = std::max(st.max_res, std::fabs(r));
        const double rr = nth_root(sig[ctx.m], ctx.m) - nth_root(f[fl], ctx.m);
        st.max_root_res = std::max(st.max_root_res, std::fabs(rr));
        st.min_margin = std::min(st.min_margin, ctx.margin_from(sig));
    }
    if (ctx.interior.empty()) st.min_margin = 0.0;
    return st;
}

// One lexicographic nonlinear Gauss-Seidel sweep: at each interior point the
// scalar equation S_m(H(t)) = f is solved for the center value t by bracketed
// bisection on the admissible branch. The shift S_k(A + cI) is an exact
// polynomial in c, so no eigen-decomposition is needed.
void gs_sweep(Ctx& ctx, double* u, const double* f) {
    const int n = ctx.n, m = ctx.m;
    double sig[4];
    for (size_t fl : ctx.interior) {
        // Hessian entries at the current state of u (center included).
        if (n == 2) {
            const kern::Hess2 hh = kern::hess2_at(u, fl, ctx.g4);
            sig[0] = 1.0;
            sig[1] = hh.a11 + hh.a22;
            sig[2] = hh.a11 * hh.a22 - hh.r12 * hh.r12 - hh.i12 * hh.i12;
        } else {
            const double q = 0.25 * ctx.inv_h2;
            const double c0 = u[fl];
            double dg[3] = {0, 0, 0}, re[3] = {0, 0, 0}, im[3] = {0, 0, 0};
            for (int p = 0; p < n; ++p) {
                const size_t sx = ctx.strides[2 * p], sy = ctx.strides[2 * p + 1];
                dg[p] = q * (u[fl + sx] + u[fl - sx] + u[fl + sy] + u[fl - sy] - 4.0 * c0);
            }
            auto cross = [&](size_t sa, size_t sb) {
                return u[fl + sa + sb] - u[fl + sa - sb] - u[fl - sa + sb] + u[fl - sa - sb];
            };
            const double qc = 0.0625 * ctx.inv_h2;
            int pair = 0;
            for (int p = 0; p < n; ++p)
                for (int qq = p + 1; qq < n; ++qq, ++pair) {
                    re[pair] = qc * (cross(ctx.strides[2 * p], ctx.strides[2 * qq]) +
                                     cross(ctx.strides[2 * p + 1], ctx.strides[2 * qq + 1]));
                    im[pair] = qc * (cross(ctx.strides[2 * p], ctx.strides[2 * qq + 1]) -
                                     cross(ctx.strides[2 * p + 1], ctx.strides[2 * qq]));
                }
            sig[0] = 1.0;
            if (n == 1) {
                sig[1] = dg[0];
            } else {
                const double n01 = re[0] * re[0] + im[0] * im[0];
                const double n02 = re[1] * re[1] + im[1] * im[1];
                const double n12 = re[2] * re[2] + im[2] * im[2];
                sig[1] = dg[0] + dg[1] + dg[2];
                sig[2] = dg[0] * dg[1] + dg[0] * dg[2] + dg[1] * dg[2] - n01 - n02 - n12;
                const double tripr = (re[0] * re[2] - im[0] * im[2]) * re[1] +
                                     (re[0] * im[2] + im[0] * re[2]) * im[1];
                sig[3] = dg[0] * dg[1] * dg[2] - dg[0] * n12 - dg[1] * n02 - dg[2] * n01 + 2.0 * tripr;
            }
        }

        const double fv = f[fl];
        // good(c) is monotone nondecreasing in c: the admissible branch with
        // S_m >= f is an up-set along the +I direction.
        auto good = [&](double c) {
            for (int k = 1; k <= m; ++k)
                if (kern::sigma_shift(n, k, sig, c) <= 0.0) return false;
            return kern::sigma_shift(n, m, sig, c) >= fv;
        };
        double lo, hi;
        double d = 1.0;
        bool found = false;
        if (good(0.0)) {
            hi = 0.0;
            lo = -d;
            for (int i = 0; i < 60; ++i) {
                if (!good(lo)) { found = true; break; }
                hi = lo;
                d *= 2.0;
                lo = -d;
            }
        } else {
            lo = 0.0;
            hi = d;
            for (int i = 0; i < 60; ++i) {
                if (good(hi)) { found = true; break; }
                lo = hi;
                d *= 2.0;
                hi = d;
            }
        }
        if (!found) continue;  // pathological point; leave the value unchanged
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (good(mid)) hi = mid;
            else lo = mid;
        }
        const double c_star = 0.5 * (lo + hi);
        u[fl] -= c_star / ctx.inv_h2;
    }
}

// Newton direction coefficients on the concave scale S_m^{1/m}: the
// linearized operator is tr(a . H w) with a = (1/m) S_m^{(1-m)/m} D_m(A).
struct NewtonFields {
    std::array<std::vector<double>, 3> cd, cre, cim;
    std::vector<double> step;  // relax * mask / diag
    std::vector<double> rhs;   // -(S_m^{1/m} - f^{1/m})
    void resize(int n, size_t npts) {
        const int pairs = n * (n - 1) / 2;
        for (int p = 0; p < n; ++p) cd[p].assign(npts, 0.0);
        for (int q = 0; q < pairs; ++q) {
            cre[q].assign(npts, 0.0);
            cim[q].assign(npts, 0.0);
        }
        step.assign(npts, 0.0);
        rhs.assign(npts, 0.0);
    }
};

void build_newton_fields(Ctx& ctx, const double* f, double relax, NewtonFields& nf) {
    const int n = ctx.n, m = ctx.m;
    double sig[4];
    for (size_t fl : ctx.interior) {
        ctx.sigmas(fl, sig);
        const double sm = std::max(sig[m], 1e-300);
        const double fac = (1.0 / m) * std::pow(sm, (1.0 - m) / static_cast<double>(m));
        if (m == 1) {
            for (int p = 0; p < n; ++p) nf.cd[p][fl] = 1.0;
        } else if (m == 2) {
            for (int p = 0; p < n; ++p) nf.cd[p][fl] = fac * (sig[1] - ctx.hd[p][fl]);
            const int pairs = n * (n - 1) / 2;
            for (int q = 0; q < pairs; ++q) {
                nf.cre[q][fl] = -fac * ctx.hre[q][fl];
                nf.cim[q][fl] = -fac * ctx.him[q][fl];
            }
        } else {
            // m = 3, n = 3: D_3 = S_2 I - S_1 A + A^2.
            const double d0 = ctx.hd[0][fl], d1 = ctx.hd[1][fl], d2 = ctx.hd[2][fl];
            const double r01 = ctx.hre[0][fl], i01 = ctx.him[0][fl];
            const double r02 = ctx.hre[1][fl], i02 = ctx.him[1][fl];
            const double r12 = ctx.hre[2][fl], i12 = ctx.him[2][fl];
            const double n01 = r01 * r01 + i01 * i01;
            const double n02 = r02 * r02 + i02 * i02;
            const double n12 = r12 * r12 + i12 * i12;
            nf.cd[0][fl] = fac * (sig[2] - sig[1] * d0 + d0 * d0 + n01 + n02);
            nf.cd[1][fl] = fac * (sig[2] - sig[1] * d1 + d1 * d1 + n01 + n12);
            nf.cd[2][fl] = fac * (sig[2] - sig[1] * d2 + d2 * d2 + n02 + n12);
            // (A^2)_{01} = a01 (d0 + d1) + a02 conj(a12)
            nf.cre[0][fl] = fac * (-sig[1] * r01 + r01 * (d0 + d1) + r02 * r12 + i02 * i12);
            nf.cim[0][fl] = fac * (-sig[1] * i01 + i01 * (d0 + d1) + i02 * r12 - r02 * i12);
            // (A^2)_{02} = a01 a12 + a02 (d0 + d2)
            nf.cre[1][fl] = fac * (-sig[1] * r02 + r01 * r12 - i01 * i12 + r02 * (d0 + d2));
            nf.cim[1][fl] = fac * (-sig[1] * i02 + r01 * i12 + i01 * r12 + i02 * (d0 + d2));
            // (A^2)_{12} = conj(a01) a02 + a12 (d1 + d2)
            nf.cre[2][fl] = fac * (-sig[1] * r12 + r01 * r02 + i01 * i02 + r12 * (d1 + d2));
            nf.cim[2][fl] = fac * (-sig[1] * i12 + r01 * i02 - i01 * r02 + i12 * (d1 + d2));
        }
        double trace_c = 0.0;
        for (int p = 0; p < n; ++p) trace_c += nf.cd[p][fl];
        const double diag = -ctx.inv_h2 * trace_c;
        nf.step[fl] = relax / diag;
        nf.rhs[fl] = -(nth_root(sig[m], m) - nth_root(f[fl], m));
    }
}

// Generic scalar Jacobi sweep for n != 2 (small grids only).
void jacobi_generic(Ctx& ctx, const double* w, double* w_next, const NewtonFields& nf) {
    std::memcpy(w_next, w, ctx.npts * sizeof(double));
    const int n = ctx.n;
    const double q = 0.25 * ctx.inv_h2;
    const double qc = 0.0625 * ctx.inv_h2;
    for (size_t fl : ctx.interior) {
        double lw = 0.0;
        for (int p = 0; p < n; ++p) {
            const size_t sx = ctx.strides[2 * p], sy = ctx.strides[2 * p + 1];
            const double hpp =
                q * (w[fl + sx] + w[fl - sx] + w[fl + sy] + w[fl - sy] - 4.0 * w[fl]);
            lw += nf.cd[p][fl] * hpp;
        }
        auto cross = [&](size_t sa, size_t sb) {
            return w[fl + sa + sb] - w[fl + sa - sb] - w[fl - sa + sb] + w[fl - sa - sb];
        };
        int pair = 0;
        for (int p = 0; p < n; ++p)
            for (int qq = p + 1; qq < n; ++qq, ++pair) {
                const double hr = qc * (cross(ctx.strides[2 * p], ctx.strides[2 * qq]) +
                                        cross(ctx.strides[2 * p + 1], ctx.strides[2 * qq + 1]));
                const double hi = qc * (cross(ctx.strides[2 * p], ctx.strides[2 * qq + 1]) -
                                        cross(ctx.strides[2 * p + 1], ctx.strides[2 * qq]));
                lw += 2.0 * (nf.cre[pair][fl] * hr + nf.cim[pair][fl] * hi);
            }
        w_next[fl] = w[fl] + nf.step[fl] * (nf.rhs[fl] - lw);
    }
}

// Inner linear solve: damped Jacobi until the update norm stalls below the
// tolerance. Returns the direction in `delta`.
void solve_linear(Ctx& ctx, const NewtonFields& nf, const SolverConfig& cfg,
                  std::vector<double>& delta, std::vector<double>& scratch) {
    std::fill(delta.begin(), delta.end(), 0.0);
    double rhs_norm = 0.0, step_max = 0.0;
    for (size_t fl : ctx.interior) {
        rhs_norm = std::max(rhs_norm, std::fabs(nf.rhs[fl]));
        step_max = std::max(step_max, std::fabs(nf.step[fl]));
    }
    const double tol = cfg.lin_tol * rhs_norm * step_max;
    for (int sweep = 0; sweep < cfg.lin_sweeps; ++sweep) {
        if (ctx.n == 2) {
            kern::ops().jacobi_sweep_n2(ctx.g4, delta.data(), scratch.data(), nf.cd[0].data(),
                                        nf.cd[1].data(), nf.cre[0].data(), nf.cim[0].data(),
                                        nf.step.data(), nf.rhs.data());
        } else {
            jacobi_generic(ctx, delta.data(), scratch.data(), nf);
        }
        double upd = 0.0;
        for (size_t fl : ctx.interior) upd = std::max(upd, std::fabs(scratch[fl] - delta[fl]));
        delta.swap(scratch);
        if (upd <= tol) break;
    }
}

GridField clamp_to_collar(const GridField& rho, const GridField& phi, double barrier) {
    GridField u0 = phi;
    u0.mutable_mask().assign(rho.mask().begin(), rho.mask().end());
    for (size_t f = 0; f < u0.size(); ++f)
        if (rho.interior(f)) u0[f] = phi[f] + barrier * rho[f];
    return u0;
}

void check_problem(const GridField& rho, const GridField& f, const GridField& phi, int m) {
    if (rho.topology() != Topology::box)
        throw ArgumentError("solver: box topology required");
    if (!rho.has_mask()) throw ArgumentError("solver: domain grid lacks an interior mask");
    if (!f.same_grid(rho) || !phi.same_grid(rho))
        throw ArgumentError("solver: f/phi grid mismatch with the domain");
    if (m < 1 || m > rho.n()) throw ArgumentError("solver: m out of range");
    for (size_t fl = 0; fl < f.size(); ++fl)
        if (rho.interior(fl) && f[fl] < 0.0)
            throw ArgumentError("solver: right-hand side must be nonnegative");
}

SolveResult run_solve(const GridField& rho, const GridField& f, const GridField& phi, int m,
                      const SolverConfig& cfg, const GridField* warm_start) {
    const auto t0 = Clock::now();
    cfg.validate();
    check_problem(rho, f, phi, m);

    SolveResult out;
    SolveDiagnostics& diag = out.diagnostics;
    GridField u = warm_start ? *warm_start
                             : initialize(rho, f, phi, m, &diag.barrier_multiplier,
                                          cfg.init_extra_barrier);
    u.mutable_mask().assign(rho.mask().begin(), rho.mask().end());
    if (warm_start) {
        // The collar is part of the problem statement, not of the start.
        for (size_t fl = 0; fl < u.size(); ++fl)
            if (!rho.interior(fl)) u[fl] = phi[fl];
    }

    Ctx ctx;
    ctx.bind(rho, m);

    if (cfg.scheme == SolverConfig::Scheme::newton) {
        double fmin = std::numeric_limits<double>::infinity();
        for (size_t fl : ctx.interior) fmin = std::min(fmin, f[fl]);
        if (!(fmin > 0.0))
            throw ArgumentError("solver: newton scheme needs a strictly positive right-hand side");
    }

    EvalStats st = evaluate(ctx, u.values().data(), f.values().data());

    if (cfg.scheme == SolverConfig::Scheme::newton) {
        // Collar clamping can leave the boundary ring outside the cone; a few
        // Gauss-Seidel sweeps restore pointwise admissibility before Newton.
        int repair = 0;
        while (st.min_margin < cfg.cone_floor && repair < 80) {
            gs_sweep(ctx, u.values().data(), f.values().data());
            st = evaluate(ctx, u.values().data(), f.values().data());
            ++repair;
        }
        if (st.min_margin < cfg.cone_floor)
            throw InitializationError("solver: could not reach an admissible start");

        NewtonFields nf;
        nf.resize(ctx.n, ctx.npts);
        std::vector<double> delta(ctx.npts, 0.0), scratch(ctx.npts, 0.0), trial(ctx.npts, 0.0);

        int iter = 0;
        for (; iter < cfg.max_outer; ++iter) {
            diag.residual_history.push_back(st.max_res);
            diag.margin_history.push_back(st.min_margin);
            if (st.max_res <= cfg.tol_residual) break;

            build_newton_fields(ctx, f.values().data(), cfg.lin_relax, nf);
            solve_linear(ctx, nf, cfg, delta, scratch);

            double alpha = cfg.damping;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                std::memcpy(trial.data(), u.values().data(), ctx.npts * sizeof(double));
                for (size_t fl : ctx.interior) trial[fl] += alpha * delta[fl];
                const EvalStats ts = evaluate(ctx, trial.data(), f.values().data());
                if (ts.min_margin >= cfg.cone_floor &&
                    ts.max_root_res <= st.max_root_res * (1.0 - 1e-3 * alpha)) {
                    std::memcpy(u.values().data(), trial.data(), ctx.npts * sizeof(double));
                    st = ts;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted)
                throw ConvergenceError("solver: line search failed", st.max_res, iter);
        }
        diag.iterations = iter;
        if (st.max_res > cfg.tol_residual)
            throw ConvergenceError("solver: newton did not converge within max_outer",
                                   st.max_res, iter);
    } else {
        int sweep = 0;
        for (; sweep < cfg.max_outer; ++sweep) {
            diag.residual_history.push_back(st.max_res);
            if (st.max_res <= cfg.tol_residual) break;
            gs_sweep(ctx, u.values().data(), f.values().data());
            st = evaluate(ctx, u.values().data(), f.values().data());
        }
        diag.iterations = sweep;
        diag.margin_history.push_back(st.min_margin);
        if (st.max_res > cfg.tol_residual)
            throw ConvergenceError("solver: gauss-seidel did not converge within max_outer",
                                   st.max_res, sweep);
    }

    // Independent recomputation for the reported numbers.
    const EvalStats fin = evaluate(ctx, u.values().data(), f.values().data());
    diag.residual_max = fin.max_res;
    diag.cone_margin_min = fin.min_margin;
    diag.wall_time_s = seconds_since(t0);
    out.u = std::move(u);
    return out;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(tol_residual > 0.0)) throw ConfigurationError("SolverConfig: tol_residual must be > 0");
    if (max_outer < 1) throw ConfigurationError("SolverConfig: max_outer must be >= 1");
    if (!(damping > 0.0) || damping > 1.0)
        throw ConfigurationError("SolverConfig: damping must be in (0, 1]");
    if (lin_sweeps < 1) throw ConfigurationError("SolverConfig: lin_sweeps must be >= 1");
    if (!(lin_relax > 0.0) || lin_relax > 1.0)
        throw ConfigurationError("SolverConfig: lin_relax must be in (0, 1]");
    for (size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0.0))
            throw ConfigurationError("SolverConfig: eps_schedule entries must be positive");
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
            throw ConfigurationError("SolverConfig: eps_schedule must be strictly decreasing");
    }
}

GridField residual_field(const GridField& u, const GridField& f, int m) {
    if (!u.same_grid(f)) throw ArgumentError("residual_field: grid mismatch");
    if (m < 1 || m > u.n()) throw ArgumentError("residual_field: m out of range");
    GridField r = u;
    std::fill(r.values().begin(), r.values().end(), 0.0);
    const int d = u.axes();
    std::array<int, 6> idx{};
    for (size_t fl = 0; fl < u.size(); ++fl) {
        u.unflatten(fl, {idx.data(), static_cast<size_t>(d)});
        const bool inside = u.has_mask() ? u.interior(fl)
                                         : u.full_stencil({idx.data(), static_cast<size_t>(d)});
        if (!inside) continue;
        const HermitianMatrix hm = complex_hessian(u, {idx.data(), static_cast<size_t>(d)});
        r[fl] = sigma_closed_forms(hm)[m] - f[fl];
    }
    return r;
}

GridField linearized_apply(const GridField& u, const GridField& w, int m) {
    if (!u.same_grid(w)) throw ArgumentError("linearized_apply: grid mismatch");
    if (m < 1 || m > u.n()) throw ArgumentError("linearized_apply: m out of range");
    GridField out = u;
    std::fill(out.values().begin(), out.values().end(), 0.0);
    const int d = u.axes();
    const int n = u.n();
    std::array<int, 6> idx{};
    for (size_t fl = 0; fl < u.size(); ++fl) {
        u.unflatten(fl, {idx.data(), static_cast<size_t>(d)});
        const bool inside = u.has_mask() ? u.interior(fl)
                                         : u.full_stencil({idx.data(), static_cast<size_t>(d)});
        if (!inside) continue;
        const HermitianMatrix hu = complex_hessian(u, {idx.data(), static_cast<size_t>(d)});
        const auto sig = sigma_closed_forms(hu);
        const double margin = cone_margin_from_sigmas(sig, n, m);
        if (!(margin > 0.0)) {
            std::array<int, 6> where{};
            for (int a = 0; a < d; ++a) where[a] = idx[a];
            throw ConeError("linearized_apply: Hessian outside the admissible cone", where,
                            margin);
        }
        const HermitianMatrix a = d_matrix(hu, m);
        const HermitianMatrix hw = complex_hessian(w, {idx.data(), static_cast<size_t>(d)});
        double lw = 0.0;
        for (int p = 0; p < n; ++p) {
            lw += a(p, p).real() * hw(p, p).real();
            for (int q = p + 1; q < n; ++q)
                lw += 2.0 * (a(p, q).real() * hw(p, q).real() + a(p, q).imag() * hw(p, q).imag());
        }
        out[fl] = lw;
    }
    return out;
}

GridField initialize(const GridField& rho, const GridField& f, const GridField& phi, int m,
                     int* barrier_out, double extra_barrier) {
    check_problem(rho, f, phi, m);
    Ctx ctx;
    ctx.bind(rho, m);

    double fmax = 0.0;
    for (size_t fl : ctx.interior) fmax = std::max(fmax, f[fl]);

    // Points whose whole stencil stays interior; the collar clamp perturbs
    // the ring, which the solver repairs with Gauss-Seidel sweeps.
    std::vector<size_t> deep;
    std::array<int, 6> idx{};
    for (size_t fl : ctx.interior) {
        rho.unflatten(fl, {idx.data(), static_cast<size_t>(2 * rho.n())});
        if (stencil_fits_mask(rho, ctx.mask, {idx.data(), static_cast<size_t>(2 * rho.n())}))
            deep.push_back(fl);
    }

    double barrier = 0.0;
    while (barrier <= 1099511627776.0) {  // 2^40
        GridField u0 = clamp_to_collar(rho, phi, barrier + extra_barrier);
        ctx.compute_hessians(u0.values().data());
        bool ok = true;
        double sig[4];
        for (size_t fl : deep) {
            ctx.sigmas(fl, sig);
            if (!(ctx.margin_from(sig) > 0.0) || sig[m] < fmax) {
                ok = false;
                break;
            }
        }
        if (ok) {
            if (barrier_out) *barrier_out = static_cast<int>(barrier);
            return u0;
        }
        barrier = barrier == 0.0 ? 1.0 : barrier * 2.0;
    }
    throw InitializationError("initialize: barrier search exceeded 2^40");
}

SolveResult solve_dirichlet(const GridField& rho, const GridField& f, const GridField& phi,
                            int m, const SolverConfig& cfg) {
    return run_solve(rho, f, phi, m, cfg, nullptr);
}

SolveResult solve_dirichlet(const DomainSpec& domain, const GridField& f, const GridField& phi,
                            int m, const SolverConfig& cfg) {
    return run_solve(build_domain(domain), f, phi, m, cfg, nullptr);
}

SolveResult solve_dirichlet_warm(const GridField& rho, const GridField& f, const GridField& phi,
                                 int m, const SolverConfig& cfg, const GridField& start) {
    if (!start.same_grid(rho)) throw ArgumentError("solve_dirichlet_warm: start grid mismatch");
    return run_solve(rho, f, phi, m, cfg, &start);
}

SolveResult solve_homogeneous(const GridField& rho, const GridField& phi, int m,
                              const SolverConfig& cfg) {
    cfg.validate();
    if (cfg.eps_schedule.empty())
        throw ConfigurationError("solve_homogeneous: eps_schedule must be nonempty");
    const auto t0 = Clock::now();

    GridField f = phi;
    std::fill(f.values().begin(), f.values().end(), 0.0);

    SolveResult result;
    GridField prev;
    bool have_prev = false;
    SolveDiagnostics total;
    for (size_t level = 0; level < cfg.eps_schedule.size(); ++level) {
        const double eps = cfg.eps_schedule[level];
        const double fval = std::pow(eps, m);
        std::fill(f.values().begin(), f.values().end(), fval);
        SolveResult r = run_solve(rho, f, phi, m, cfg, have_prev ? &result.u : nullptr);
        if (have_prev) {
            double gap = 0.0;
            for (size_t fl = 0; fl < r.u.size(); ++fl)
                if (rho.interior(fl)) gap = std::max(gap, std::fabs(r.u[fl] - prev[fl]));
            total.eps_cauchy_gap = gap;
        }
        prev = r.u;
        have_prev = true;
        total.iterations += r.diagnostics.iterations;
        total.residual_history.insert(total.residual_history.end(),
                                      r.diagnostics.residual_history.begin(),
                                      r.diagnostics.residual_history.end());
        total.margin_history.insert(total.margin_history.end(),
                                    r.diagnostics.margin_history.begin(),
                                    r.diagnostics.margin_history.end());
        total.residual_max = r.diagnostics.residual_max;
        total.cone_margin_min = r.diagnostics.cone_margin_min;
        if (level == 0) total.barrier_multiplier = r.diagnostics.barrier_multiplier;
        result.u = std::move(r.u);
    }
    // First-level comparison field for the gap when only one level ran.
    if (cfg.eps_schedule.size() == 1) total.eps_cauchy_gap = 0.0;
    total.wall_time_s = seconds_since(t0);
    result.diagnostics = std::move(total);
    return result;
}

SolveResult solve_homogeneous(const DomainSpec& domain, const GridField& phi, int m,
                              const SolverConfig& cfg) {
    return solve_homogeneous(build_domain(domain), phi, m, cfg);
}

}  // namespace hessianlab
