#include "hessianlab/glue.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace hessianlab {

namespace {

inline int wrap_index(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

// Torus index -> unwrapped box index in [lo, hi], when the box (extent <=
// period) contains the point.
inline bool to_box_index(int i, int lo, int hi, int n, int* out) {
    const int j = lo + wrap_index(i - lo, n);
    *out = j;
    return j <= hi;
}

inline double int_pow(double t, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= t;
    return r;
}

// Quintic smoothstep, C^2, 1 at s <= 0 and 0 at s >= 1.
inline double cutoff_profile(double s) {
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

// Iterates multi-indices lo..hi (inclusive) in lexicographic order.
struct BoxIter {
    int d;
    std::array<int, 6> lo{}, hi{}, idx{};
    bool done = false;
    BoxIter(int dims, const std::array<int, 6>& l, const std::array<int, 6>& h)
        : d(dims), lo(l), hi(h) {
        idx = lo;
        for (int a = 0; a < d; ++a)
            if (lo[a] > hi[a]) done = true;
    }
    void next() {
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[a] <= hi[a]) return;
            idx[a] = lo[a];
        }
        done = true;
    }
};

double torus_value(const GridField& u, std::span<const int> idx) {
    const int d = u.axes();
    size_t f = 0;
    for (int a = 0; a < d; ++a)
        f += static_cast<size_t>(wrap_index(idx[a], u.shape(a))) * u.stride(a);
    return u[f];
}

size_t torus_flat(const GridField& u, std::span<const int> idx) {
    const int d = u.axes();
    size_t f = 0;
    for (int a = 0; a < d; ++a)
        f += static_cast<size_t>(wrap_index(idx[a], u.shape(a))) * u.stride(a);
    return f;
}

void check_torus_input(const GridField& u) {
    if (u.topology() != Topology::torus)
        throw ArgumentError("smoothing pipeline: torus topology required");
    if (u.n() > 2) throw ArgumentError("smoothing pipeline: n <= 2 supported");
}

}  // namespace

double Chart::level(std::span<const double> x, int n) const {
    double v = 0.0, r2 = 0.0;
    for (int a = 0; a < 2 * n; ++a) {
        const double t = x[a] - center[a];
        v += int_pow(t / halfwidth, power);
        r2 += t * t;
    }
    return v + sigma * r2;
}

double Chart::rho_pot(std::span<const double> x, int n) const {
    double r2 = 0.0;
    for (int a = 0; a < 2 * n; ++a) {
        const double t = x[a] - center[a];
        r2 += t * t;
    }
    return r2;
}

ChartCover make_chart_cover(int n, int fine_points, int lattice_k, double sigma, int power,
                            double inner_level_override) {
    if (n < 1 || n > 2) throw ConfigurationError("make_chart_cover: n must be 1 or 2");
    if (lattice_k < 1) throw ConfigurationError("make_chart_cover: lattice_k must be >= 1");
    if (power < 4 || power % 2 != 0)
        throw ConfigurationError("make_chart_cover: power must be even and >= 4");

    ChartCover cover;
    cover.n = n;
    cover.fine_points = fine_points;
    cover.period = 1.0;
    cover.h = cover.period / fine_points;
    cover.lattice_k = lattice_k;

    const double h = cover.h;
    const double spacing = cover.period / lattice_k;
    const int d = 2 * n;

    // Two interleaved lattices (centers at i*s and (i+1/2)*s) halve the
    // deep-hole reach of a single lattice; that is what lets the charts both
    // embed injectively in a fundamental domain and hold their inner sets
    // with a multi-cell margin on the 4-torus.
    const double reach = spacing / 4.0 + 2.0 * h;  // per-axis corner the inner set must hold
    const double boundary_gap = 3.5 * h;           // inner corner to chart boundary
    const double corner_frac = std::pow(1.0 / (2.0 * n), 1.0 / power);
    const double b = (reach + boundary_gap) / corner_frac;
    const double b_cap = cover.period / 2.0 - 2.0 * h;
    if (b > b_cap)
        throw ConfigurationError("make_chart_cover: charts cannot both cover and embed at this K");

    Chart probe;
    probe.halfwidth = b;
    probe.sigma = sigma;
    probe.power = power;
    std::array<double, 6> corner{};
    for (int a = 0; a < d; ++a) corner[a] = reach;
    const double v_corner = probe.level({corner.data(), static_cast<size_t>(d)}, n);
    double v_inner = std::min(1.25 * v_corner + 0.02, 0.55);
    if (inner_level_override > -1.0 && inner_level_override < 0.0)
        v_inner = 1.0 + inner_level_override;

    int id = 0;
    for (int layer = 0; layer < 2; ++layer) {
        const double offset = layer == 0 ? 0.5 * spacing : 0.0;
        std::array<int, 6> kidx{};
        while (true) {
            Chart c;
            c.id = id++;
            c.halfwidth = b;
            c.sigma = sigma;
            c.power = power;
            c.inner_level = v_inner - 1.0;
            for (int a = 0; a < d; ++a) {
                const double raw = kidx[a] * spacing + offset;
                c.center[a] = std::round(raw / h) * h;  // snap to the fine grid
                c.lo[a] = static_cast<int>(std::floor((c.center[a] - b) / h)) - 1;
                c.hi[a] = static_cast<int>(std::ceil((c.center[a] + b) / h)) + 1;
                if (c.hi[a] - c.lo[a] + 1 > fine_points)
                    throw ConfigurationError("make_chart_cover: chart box exceeds the period");
            }
            cover.charts.push_back(c);
            int a = d - 1;
            for (; a >= 0; --a) {
                if (++kidx[a] < lattice_k) break;
                kidx[a] = 0;
            }
            if (a < 0) break;
        }
    }
    return cover;
}

void ChartCover::verify() const {
    const int d = 2 * n;
    for (const Chart& c : charts) {
        if (2.0 * c.halfwidth >= period)
            throw CoverError("chart cover: chart does not embed injectively");
        if (!(c.inner_level < -1e-3))
            throw CoverError("chart cover: inner set does not sit strictly inside the chart");
    }
    size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<size_t>(fine_points);
    std::array<size_t, 6> strides{};
    {
        size_t s = 1;
        for (int a = d - 1; a >= 0; --a) {
            strides[a] = s;
            s *= static_cast<size_t>(fine_points);
        }
    }
    std::vector<uint8_t> covered(total, 0);
    std::array<double, 6> x{};
    for (const Chart& c : charts) {
        for (BoxIter it(d, c.lo, c.hi); !it.done; it.next()) {
            for (int a = 0; a < d; ++a) x[a] = it.idx[a] * h;
            if (c.rho_dom({x.data(), static_cast<size_t>(d)}, n) < c.inner_level) {
                size_t f = 0;
                for (int a = 0; a < d; ++a)
                    f += static_cast<size_t>(wrap_index(it.idx[a], fine_points)) * strides[a];
                covered[f] = 1;
            }
        }
    }
    for (size_t f = 0; f < total; ++f)
        if (!covered[f]) throw CoverError("chart cover: grid point in no inner set");
}

void GlueConfig::validate() const {
    if (j < 0.0) throw ConfigurationError("GlueConfig: j must be >= 0");
    if (!(delta_boundary > 0.0)) throw ConfigurationError("GlueConfig: delta_boundary must be > 0");
    if (!(eps_rhs > 0.0)) throw ConfigurationError("GlueConfig: eps_rhs must be > 0");
    if (!(cut_inner > 0.0) || !(cut_inner < cut_outer) || cut_outer > 1.0)
        throw ConfigurationError("GlueConfig: need 0 < cut_inner < cut_outer <= 1");
    if (!(h_target > 0.0)) throw ConfigurationError("GlueConfig: h_target must be > 0");
}

double smooth_max(std::span<const double> values, double j) {
    if (values.empty()) throw ArgumentError("smooth_max: empty list");
    if (!(j > 0.0)) throw ArgumentError("smooth_max: j must be positive");
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    double s = 0.0;
    for (double v : values) s += std::exp(j * (v - m));
    return m + std::log(s) / j;
}

double piece_value(const LocalPiece& piece, const GridField& u, double h_target,
                   std::span<const int> torus_idx) {
    const int d = u.axes();
    std::array<int, 6> local{};
    bool inside = true;
    for (int a = 0; a < d; ++a) {
        int j;
        if (!to_box_index(torus_idx[a], piece.lo[a], piece.hi[a], u.shape(a), &j)) inside = false;
        local[a] = j - piece.lo[a];
    }
    if (!inside) return torus_value(u, torus_idx) - 2.0 * h_target;
    return piece.box_field[piece.box_field.flat_index({local.data(), static_cast<size_t>(d)})];
}

namespace {

// Chart-box grid (possibly strided relative to the fine grid) sampling
// rho_dom, with the interior mask filled in.
GridField sample_chart_rho(const Chart& chart, int n, const std::array<int, 6>& lo,
                           const std::array<int, 6>& hi, double h_fine, int step) {
    const int d = 2 * n;
    std::array<int, 6> shape{};
    std::array<double, 6> origin{};
    for (int a = 0; a < d; ++a) {
        shape[a] = (hi[a] - lo[a]) / step + 1;
        origin[a] = lo[a] * h_fine;
    }
    GridField rho = GridField::box(n, {shape.data(), static_cast<size_t>(d)}, step * h_fine,
                                   {origin.data(), static_cast<size_t>(d)});
    rho.sample([&](std::span<const double> x) { return chart.rho_dom(x, n); });
    std::vector<uint8_t>& mask = rho.mutable_mask();
    mask.assign(rho.size(), 0);
    std::array<int, 6> idx{};
    for (size_t f = 0; f < rho.size(); ++f) {
        rho.unflatten(f, {idx.data(), static_cast<size_t>(d)});
        if (rho[f] < 0.0 && rho.full_stencil({idx.data(), static_cast<size_t>(d)})) mask[f] = 1;
    }
    return rho;
}

// Multilinear interpolation of the coarse chart solution onto a fine box
// point given by its global (unwrapped) index.
double interp_coarse(const GridField& uc, const std::array<int, 6>& lo2,
                     std::span<const int> fine_idx, int d) {
    std::array<int, 6> cell{};
    std::array<double, 6> frac{};
    for (int a = 0; a < d; ++a) {
        int rel = fine_idx[a] - lo2[a];
        if (rel < 0) rel = 0;
        cell[a] = rel / 2;
        frac[a] = (rel % 2) * 0.5;
        if (cell[a] >= uc.shape(a) - 1) {
            cell[a] = uc.shape(a) - 2;
            frac[a] = 1.0;
        }
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        std::array<int, 6> ci{};
        for (int a = 0; a < d; ++a) {
            const int bit = (corner >> a) & 1;
            w *= bit ? frac[a] : 1.0 - frac[a];
            ci[a] = cell[a] + bit;
        }
        if (w == 0.0) continue;
        acc += w * uc[uc.flat_index({ci.data(), static_cast<size_t>(d)})];
    }
    return acc;
}

}  // namespace

LocalCandidate local_solution(const GridField& u, const ChartCover& cover, int chart_id, int m,
                              const GlueConfig& cfg, const SolverConfig& solver_cfg) {
    check_torus_input(u);
    cfg.validate();
    const Chart& chart = cover.charts.at(chart_id);
    const int n = u.n(), d = 2 * n;
    const double h = cover.h;
    if (chart.halfwidth <= 2.0 * h)
        throw GluingInfeasibleError("local_solution: chart is degenerate at this grid spacing",
                                    0.0);

    GridField rho_f = sample_chart_rho(chart, n, chart.lo, chart.hi, h, 1);
    GridField g = rho_f;
    {
        std::array<int, 6> idx{}, gidx{};
        std::array<double, 6> x{};
        for (size_t f = 0; f < g.size(); ++f) {
            g.unflatten(f, {idx.data(), static_cast<size_t>(d)});
            for (int a = 0; a < d; ++a) {
                gidx[a] = idx[a] + chart.lo[a];
                x[a] = gidx[a] * h;
            }
            g[f] = torus_value(u, {gidx.data(), static_cast<size_t>(d)}) +
                   chart.rho_pot({x.data(), static_cast<size_t>(d)}, n);
        }
        g.mutable_mask().clear();
    }

    // Half-resolution geometry on even global indices, nested in the fine box.
    std::array<int, 6> lo2{}, hi2{};
    for (int a = 0; a < d; ++a) {
        lo2[a] = chart.lo[a] + wrap_index(chart.lo[a], 2);
        hi2[a] = chart.hi[a] - wrap_index(chart.hi[a], 2);
    }
    GridField rho_c = sample_chart_rho(chart, n, lo2, hi2, h, 2);
    size_t coarse_interior = 0;
    for (size_t f = 0; f < rho_c.size(); ++f)
        if (rho_c.interior(f)) ++coarse_interior;

    GridField f_fine = rho_f, f_coarse = rho_c, g_coarse = rho_c;
    f_fine.mutable_mask().clear();
    f_coarse.mutable_mask().clear();
    g_coarse.mutable_mask().clear();
    std::fill(f_fine.values().begin(), f_fine.values().end(), cfg.eps_rhs);
    std::fill(f_coarse.values().begin(), f_coarse.values().end(), cfg.eps_rhs);
    {
        std::array<int, 6> idx{}, fidx{};
        for (size_t f = 0; f < g_coarse.size(); ++f) {
            g_coarse.unflatten(f, {idx.data(), static_cast<size_t>(d)});
            for (int a = 0; a < d; ++a) fidx[a] = (lo2[a] + 2 * idx[a]) - chart.lo[a];
            g_coarse[f] = g[g.flat_index({fidx.data(), static_cast<size_t>(d)})];
        }
    }

    double delta = cfg.delta_boundary;
    double worst_margin = -std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 20; ++attempt, delta *= 0.5) {
        GridField phi_f = g;
        for (size_t f = 0; f < phi_f.size(); ++f) phi_f[f] -= delta;

        GridField warm = phi_f;
        if (coarse_interior > 0) {
            GridField phi_c = g_coarse;
            for (size_t f = 0; f < phi_c.size(); ++f) phi_c[f] -= delta;
            SolverConfig cfg_c = solver_cfg;
            cfg_c.scheme = SolverConfig::Scheme::gauss_seidel;
            cfg_c.tol_residual = std::max(solver_cfg.tol_residual, 0.02 * cfg.eps_rhs);
            cfg_c.max_outer = 4000;
            SolveResult coarse = solve_dirichlet(rho_c, f_coarse, phi_c, m, cfg_c);
            std::array<int, 6> idx{}, gidx{};
            for (size_t f = 0; f < warm.size(); ++f) {
                if (!rho_f.interior(f)) continue;
                warm.unflatten(f, {idx.data(), static_cast<size_t>(d)});
                for (int a = 0; a < d; ++a) gidx[a] = idx[a] + chart.lo[a];
                warm[f] = interp_coarse(coarse.u, lo2, {gidx.data(), static_cast<size_t>(d)}, d);
            }
        }

        SolverConfig cfg_f = solver_cfg;
        cfg_f.scheme = SolverConfig::Scheme::newton;
        cfg_f.tol_residual = std::max(solver_cfg.tol_residual, 0.02 * cfg.eps_rhs);
        SolveResult fine;
        try {
            fine = solve_dirichlet_warm(rho_f, f_fine, phi_f, m, cfg_f, warm);
        } catch (const ConvergenceError&) {
            SolverConfig cfg_gs = cfg_f;
            cfg_gs.scheme = SolverConfig::Scheme::gauss_seidel;
            cfg_gs.max_outer = 6000;
            fine = solve_dirichlet_warm(rho_f, f_fine, phi_f, m, cfg_gs, warm);
        }

        double margin = std::numeric_limits<double>::infinity();
        for (size_t f = 0; f < rho_f.size(); ++f)
            if (rho_f[f] < chart.inner_level) margin = std::min(margin, fine.u[f] - g[f]);
        worst_margin = std::max(worst_margin, margin);
        if (margin > 0.0) {
            LocalCandidate cand;
            cand.chart_id = chart_id;
            cand.v = std::move(fine.u);
            cand.delta_used = delta;
            cand.inner_margin = margin;
            return cand;
        }
    }
    throw GluingInfeasibleError("local_solution: inner margin not attained after delta retries",
                                worst_margin);
}

LocalPiece modify_extend(const LocalCandidate& cand, const GridField& u, const ChartCover& cover,
                         int m, const GlueConfig& cfg) {
    check_torus_input(u);
    cfg.validate();
    const Chart& chart = cover.charts.at(cand.chart_id);
    const int n = u.n(), d = 2 * n;
    const double h = cover.h;
    const double h_t = cfg.h_target;

    LocalPiece piece;
    piece.chart_id = cand.chart_id;
    piece.lo = chart.lo;
    piece.hi = chart.hi;
    piece.delta_used = cand.delta_used;
    piece.inner_margin = cand.inner_margin;
    piece.box_field = cand.v;
    piece.box_field.mutable_mask().clear();

    GridField& bf = piece.box_field;
    std::array<int, 6> idx{}, gidx{};
    std::array<double, 6> x{};
    piece.bullet1_margin = std::numeric_limits<double>::infinity();
    piece.bullet2_margin = std::numeric_limits<double>::infinity();
    double bullet3_margin = std::numeric_limits<double>::infinity();
    std::array<int, 6> b1_idx{}, b2_idx{}, b3_idx{};

    for (size_t f = 0; f < bf.size(); ++f) {
        bf.unflatten(f, {idx.data(), static_cast<size_t>(d)});
        for (int a = 0; a < d; ++a) {
            gidx[a] = idx[a] + chart.lo[a];
            x[a] = gidx[a] * h;
        }
        const double uval = torus_value(u, {gidx.data(), static_cast<size_t>(d)});
        const double level = chart.level({x.data(), static_cast<size_t>(d)}, n);
        const double chi =
            cutoff_profile((level - cfg.cut_inner) / (cfg.cut_outer - cfg.cut_inner));
        const double background = uval - 2.0 * h_t;
        const double local = cand.v[f] - chart.rho_pot({x.data(), static_cast<size_t>(d)}, n);
        const double val = background + chi * (local - background);
        bf[f] = val;

        const double m1 = uval + h_t - val;
        if (m1 < piece.bullet1_margin) {
            piece.bullet1_margin = m1;
            b1_idx = gidx;
        }
        if (level - 1.0 < chart.inner_level) {
            const double m2 = val - uval;
            if (m2 < piece.bullet2_margin) {
                piece.bullet2_margin = m2;
                b2_idx = gidx;
            }
        }
        if (level >= 1.0) {
            const double m3 = uval - val;
            if (m3 < bullet3_margin) {
                bullet3_margin = m3;
                b3_idx = gidx;
            }
        }
    }
    if (!(piece.bullet1_margin > 0.0))
        throw ModificationError("modify_extend: u_k < u + h fails", "u_k < u + h on M", b1_idx);
    if (!(piece.bullet2_margin > 0.0))
        throw ModificationError("modify_extend: u_k > u on the inner set fails",
                                "u_k > u on closure(U'_k)", b2_idx);
    if (!(bullet3_margin > 0.0))
        throw ModificationError("modify_extend: u_k < u outside the chart fails",
                                "u_k < u on M minus U_k", b3_idx);

    // Strict omega-admissibility, claimed where the cutoff is identically
    // one: there the piece is exactly v - rho_pot, whose lifted Hessian is
    // H(v). Across the cutoff transition the claim cannot hold at this chart
    // geometry (the blend derivative terms dwarf any solution margin); the
    // glued field's own margin check covers that zone via the sharpness
    // escalation.
    GridField global = u;
    for (size_t f = 0; f < global.size(); ++f) global[f] = u[f] - 2.0 * h_t;
    for (BoxIter it(d, piece.lo, piece.hi); !it.done; it.next()) {
        std::array<int, 6> local{};
        for (int a = 0; a < d; ++a) local[a] = it.idx[a] - piece.lo[a];
        global[torus_flat(u, {it.idx.data(), static_cast<size_t>(d)})] =
            bf[bf.flat_index({local.data(), static_cast<size_t>(d)})];
    }
    piece.admissible_mask.assign(bf.size(), 0);
    piece.bullet4_margin = std::numeric_limits<double>::infinity();
    std::array<int, 6> b4_idx{};
    for (size_t f = 0; f < bf.size(); ++f) {
        bf.unflatten(f, {idx.data(), static_cast<size_t>(d)});
        for (int a = 0; a < d; ++a) {
            gidx[a] = idx[a] + chart.lo[a];
            x[a] = gidx[a] * h;
        }
        if (chart.level({x.data(), static_cast<size_t>(d)}, n) > cfg.cut_inner) continue;
        piece.admissible_mask[f] = 1;
        std::array<int, 6> tix{};
        for (int a = 0; a < d; ++a) tix[a] = wrap_index(gidx[a], u.shape(a));
        HermitianMatrix hm = complex_hessian(global, {tix.data(), static_cast<size_t>(d)});
        hm.shift(1.0);
        const auto sig = sigma_closed_forms(hm);
        const double margin = cone_margin_from_sigmas(sig, n, m);
        if (margin < piece.bullet4_margin) {
            piece.bullet4_margin = margin;
            b4_idx = gidx;
        }
    }
    if (!(piece.bullet4_margin > 0.0))
        throw ModificationError("modify_extend: strict admissibility fails on the claimed set",
                                "u_k strictly admissible on claimed set", b4_idx);
    return piece;
}

GlueResult glue(const GridField& u, const ChartCover& cover,
                const std::vector<LocalPiece>& pieces, int m, const GlueConfig& cfg) {
    check_torus_input(u);
    cfg.validate();
    if (pieces.empty()) throw ArgumentError("glue: no pieces");
    const int d = u.axes();
    const double h_t = cfg.h_target;
    const size_t npts = u.size();
    const double n_pieces = static_cast<double>(pieces.size());

    if (!(cfg.j >= std::log(n_pieces) / h_t))
        throw ConfigurationError("glue: j below ln(N)/h_target");

    {
        std::vector<uint8_t> covered(npts, 0);
        std::array<double, 6> x{};
        for (const LocalPiece& p : pieces) {
            const Chart& c = cover.charts.at(p.chart_id);
            for (BoxIter it(d, p.lo, p.hi); !it.done; it.next()) {
                for (int a = 0; a < d; ++a) x[a] = it.idx[a] * cover.h;
                if (c.rho_dom({x.data(), static_cast<size_t>(d)}, u.n()) < c.inner_level)
                    covered[torus_flat(u, {it.idx.data(), static_cast<size_t>(d)})] = 1;
            }
        }
        for (size_t f = 0; f < npts; ++f)
            if (!covered[f]) throw CoverError("glue: inner sets do not cover the grid");
    }

    std::vector<double> peak(npts);
    std::vector<uint16_t> count(npts, 0);
    for (size_t f = 0; f < npts; ++f) peak[f] = u[f] - 2.0 * h_t;
    for (const LocalPiece& p : pieces) {
        for (BoxIter it(d, p.lo, p.hi); !it.done; it.next()) {
            const size_t tf = torus_flat(u, {it.idx.data(), static_cast<size_t>(d)});
            std::array<int, 6> local{};
            for (int a = 0; a < d; ++a) local[a] = it.idx[a] - p.lo[a];
            const double v =
                p.box_field[p.box_field.flat_index({local.data(), static_cast<size_t>(d)})];
            peak[tf] = std::max(peak[tf], v);
            ++count[tf];
        }
    }
    GridField psi = u;
    {
        std::vector<double> acc(npts, 0.0);
        for (const LocalPiece& p : pieces) {
            for (BoxIter it(d, p.lo, p.hi); !it.done; it.next()) {
                const size_t tf = torus_flat(u, {it.idx.data(), static_cast<size_t>(d)});
                std::array<int, 6> local{};
                for (int a = 0; a < d; ++a) local[a] = it.idx[a] - p.lo[a];
                const double v =
                    p.box_field[p.box_field.flat_index({local.data(), static_cast<size_t>(d)})];
                acc[tf] += std::exp(cfg.j * (v - peak[tf]));
            }
        }
        for (size_t f = 0; f < npts; ++f) {
            const double n_bg = n_pieces - count[f];
            const double bg = u[f] - 2.0 * h_t;
            const double s = acc[f] + n_bg * std::exp(cfg.j * (bg - peak[f]));
            psi[f] = peak[f] + std::log(s) / cfg.j;
        }
    }

    GlueResult res;
    res.j_used = cfg.j;
    res.psi = std::move(psi);
    res.sandwich = sandwich_check(u, res.psi, h_t, 1e-9);
    res.omega_margin_min = omega_margin_min(res.psi, m);
    res.admissibility.pass = res.omega_margin_min > 0.0;
    res.admissibility.worst = -res.omega_margin_min;
    if (!res.admissibility.pass) res.admissibility.note = "omega margin not positive";
    return res;
}

double omega_margin_min(const GridField& psi, int m) {
    const int d = psi.axes();
    double worst = std::numeric_limits<double>::infinity();
    std::array<int, 6> idx{};
    for (size_t f = 0; f < psi.size(); ++f) {
        psi.unflatten(f, {idx.data(), static_cast<size_t>(d)});
        if (psi.topology() == Topology::box &&
            !psi.full_stencil({idx.data(), static_cast<size_t>(d)}))
            continue;
        HermitianMatrix hm = complex_hessian(psi, {idx.data(), static_cast<size_t>(d)});
        hm.shift(1.0);
        const auto sig = sigma_closed_forms(hm);
        worst = std::min(worst, cone_margin_from_sigmas(sig, psi.n(), m));
    }
    return worst;
}

PipelineResult smoothing_pipeline(const GridField& u, int m, const GlueConfig& cfg,
                                  const SolverConfig& solver_cfg, int lattice_k) {
    check_torus_input(u);
    cfg.validate();
    const int n = u.n(), d = 2 * n;
    PipelineResult out;

    // Lattice density policy: the local majorant exceeds u by roughly the
    // chart's squared halfwidth (disc averages of the lifted boundary data),
    // so charts shrink until that estimate plus the input's per-chart
    // oscillation fits under h_target.
    int k_sel = lattice_k;
    if (k_sel <= 0) {
        for (int k = 2; k <= 5; ++k) {
            ChartCover probe;
            try {
                probe = make_chart_cover(n, u.shape(0), k);
            } catch (const ConfigurationError&) {
                continue;
            }
            double worst = 0.0;
            std::array<double, 6> x{};
            for (const Chart& c : probe.charts) {
                double umin = std::numeric_limits<double>::infinity(), umax = -umin;
                for (BoxIter it(d, c.lo, c.hi); !it.done; it.next()) {
                    for (int a = 0; a < d; ++a) x[a] = it.idx[a] * probe.h;
                    if (c.rho_dom({x.data(), static_cast<size_t>(d)}, n) >= 0.0) continue;
                    const double uv = torus_value(u, {it.idx.data(), static_cast<size_t>(d)});
                    umin = std::min(umin, uv);
                    umax = std::max(umax, uv);
                }
                const double osc_u = umax > umin ? umax - umin : 0.0;
                worst = std::max(worst, 1.1 * c.halfwidth * c.halfwidth + osc_u);
            }
            if (worst <= 0.95 * cfg.h_target) {
                k_sel = k;
                break;
            }
        }
        if (k_sel <= 0)
            throw ConfigurationError("smoothing_pipeline: no feasible chart lattice up to K=5");
    }

    out.lattice_k = k_sel;
    out.cover = make_chart_cover(n, u.shape(0), k_sel);
    out.cover.verify();

    out.pieces.reserve(out.cover.charts.size());
    for (size_t k = 0; k < out.cover.charts.size(); ++k) {
        LocalCandidate cand = local_solution(u, out.cover, static_cast<int>(k), m, cfg, solver_cfg);
        out.pieces.push_back(modify_extend(cand, u, out.cover, m, cfg));
    }

    // Sharpness from the measured headroom min(u + h - max_k u_k), doubled
    // until the glued field holds a positive admissibility margin.
    double headroom = std::numeric_limits<double>::infinity();
    {
        std::vector<double> peak(u.size());
        for (size_t f = 0; f < u.size(); ++f) peak[f] = u[f] - 2.0 * cfg.h_target;
        for (const LocalPiece& p : out.pieces) {
            for (BoxIter it(d, p.lo, p.hi); !it.done; it.next()) {
                const size_t tf = torus_flat(u, {it.idx.data(), static_cast<size_t>(d)});
                std::array<int, 6> local{};
                for (int a = 0; a < d; ++a) local[a] = it.idx[a] - p.lo[a];
                peak[tf] = std::max(peak[tf], p.box_field[p.box_field.flat_index(
                                                  {local.data(), static_cast<size_t>(d)})]);
            }
        }
        for (size_t f = 0; f < u.size(); ++f)
            headroom = std::min(headroom, u[f] + cfg.h_target - peak[f]);
    }
    if (!(headroom > 0.0))
        throw ModificationError("smoothing_pipeline: no headroom under u + h", "u_k < u + h on M",
                                {});

    GlueConfig run_cfg = cfg;
    const double n_pieces = static_cast<double>(out.pieces.size());
    run_cfg.j = std::max({cfg.j, std::log(n_pieces) / (0.95 * headroom),
                          std::log(n_pieces) / cfg.h_target});
    out.j_doublings = 0;
    while (true) {
        out.glued = glue(u, out.cover, out.pieces, m, run_cfg);
        if (out.glued.admissibility.pass && out.glued.sandwich.pass) break;
        if (run_cfg.j >= 1048576.0) break;  // 2^20 cap; reports stay red
        run_cfg.j = std::min(run_cfg.j * 2.0, 1048576.0);
        ++out.j_doublings;
    }
    return out;
}

}  // namespace hessianlab
