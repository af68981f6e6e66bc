#pragma once

#include <limits>
#include <string>
#include <vector>

#include "hessianlab/grid.hpp"

namespace hessianlab {

struct SolverConfig {
    enum class Scheme { newton, gauss_seidel };
    Scheme scheme = Scheme::newton;
    // Convergence is measured on the raw equation scale: max |S_m(H u) - f|.
    double tol_residual = 1e-8;
    int max_outer = 10000;
    double damping = 1.0;       // initial line-search step factor, in (0, 1]
    double cone_floor = 1e-14;  // minimum admissible margin during line search
    // Levels for the degenerate path, on the S_m^{1/m} scale: each level
    // solves S_m = eps^m. Strictly decreasing and positive.
    std::vector<double> eps_schedule = {1e-2, 1e-3, 1e-4};
    int lin_sweeps = 600;       // relaxation sweep cap per Newton step
    double lin_tol = 1e-2;      // update-norm reduction target for the inner solve
    double lin_relax = 0.8;     // Jacobi relaxation factor
    double init_extra_barrier = 0.0;  // adds this multiple of rho on top of the searched barrier

    void validate() const;
};

struct SolveDiagnostics {
    int iterations = 0;
    double residual_max = std::numeric_limits<double>::quiet_NaN();
    double cone_margin_min = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> residual_history;
    std::vector<double> margin_history;  // min margin per accepted iterate
    double wall_time_s = 0.0;
    // Homogeneous path: max pointwise gap between the last two eps levels.
    double eps_cauchy_gap = std::numeric_limits<double>::quiet_NaN();
    int barrier_multiplier = 0;
};

struct SolveResult {
    GridField u;  // carries the interior mask
    SolveDiagnostics diagnostics;
};

// Pointwise S_m(complex Hessian of u) - f on the interior, 0 on the collar.
// Interior = mask when present, otherwise every full-stencil point.
GridField residual_field(const GridField& u, const GridField& f, int m);

// Pointwise tr(D_m(H u) . H w): the Gateaux derivative of residual_field at u
// in direction w. Throws ConeError when H u leaves the open cone.
GridField linearized_apply(const GridField& u, const GridField& w, int m);

// Barrier start: u0 = phi + B * rho with collar values clamped to phi, B the
// smallest power-of-two multiplier (or 0) making the discrete Hessian
// admissible with S_m >= max f at interior points away from the collar ring.
GridField initialize(const GridField& rho, const GridField& f, const GridField& phi, int m,
                     int* barrier_out = nullptr, double extra_barrier = 0.0);

SolveResult solve_dirichlet(const GridField& rho, const GridField& f, const GridField& phi,
                            int m, const SolverConfig& cfg);
SolveResult solve_dirichlet(const DomainSpec& domain, const GridField& f, const GridField& phi,
                            int m, const SolverConfig& cfg);

// Same problem started from a caller-supplied field instead of the barrier.
SolveResult solve_dirichlet_warm(const GridField& rho, const GridField& f, const GridField& phi,
                                 int m, const SolverConfig& cfg, const GridField& start);

// Degenerate right-hand side via the eps schedule, warm-starting each level.
SolveResult solve_homogeneous(const GridField& rho, const GridField& phi, int m,
                              const SolverConfig& cfg);
SolveResult solve_homogeneous(const DomainSpec& domain, const GridField& phi, int m,
                              const SolverConfig& cfg);

}  // namespace hessianlab
