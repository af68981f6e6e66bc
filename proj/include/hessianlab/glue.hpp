#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hessianlab/grid.hpp"
#include "hessianlab/solver.hpp"
#include "hessianlab/validate.hpp"

namespace hessianlab {

// Chart domain on the flat torus: a smooth strictly pseudoconvex rounded box
//   rho_dom(x) = sum_a ((x_a - c_a)/b)^P + sigma |x - c|^2 - 1,
// with the inner set U' = {rho_dom < inner_level}. Euclidean balls cannot
// cover the 4-torus with few injective charts (the lattice deep holes sit at
// exactly half the injectivity bound), so the charts flatten toward the
// fundamental-domain faces instead. The local potential is still
// rho_pot = |z - c|^2, used to lift omega-admissible inputs on the chart.
struct Chart {
    int id = 0;
    std::array<double, 6> center{};  // physical coords, snapped to the fine grid
    double halfwidth = 0.0;          // b; axis extent of U is < 2b
    double sigma = 0.25;
    int power = 6;
    double inner_level = -0.45;
    std::array<int, 6> lo{}, hi{};   // fine-grid bounding box, unwrapped indices

    // Superellipse level V(x) = rho_dom + 1, from unwrapped coordinates.
    double level(std::span<const double> x, int n) const;
    double rho_dom(std::span<const double> x, int n) const { return level(x, n) - 1.0; }
    double rho_pot(std::span<const double> x, int n) const;
};

struct ChartCover {
    int n = 2;
    int fine_points = 32;  // distinct points per axis; period = fine_points * h
    double h = 0.0;
    double period = 1.0;
    int lattice_k = 2;
    std::vector<Chart> charts;

    // Throws CoverError when some grid point lies in no inner set; also
    // enforces injective embedding and the closure(U') subset U margin.
    void verify() const;
};

// Regular K-per-axis lattice of charts with the halfwidth solved from the
// coverage requirement (lattice deep hole + overlap cells inside U').
ChartCover make_chart_cover(int n, int fine_points, int lattice_k, double sigma = 0.25,
                            int power = 6, double inner_level = -0.45);

struct GlueConfig {
    double j = 0.0;              // sharpness; 0 = derive from piece margins
    double delta_boundary = 0.02;
    double eps_rhs = 1e-4;       // right-hand side for the chart solves (S_m scale)
    double cut_inner = 0.55;     // chi = 1 at levels <= cut_inner
    double cut_outer = 0.95;     // chi = 0 at levels >= cut_outer
    double h_target = 0.5;

    void validate() const;
};

// Chart solve output before modification: v on the chart box with the
// checked margin min over U' of (v - u - rho_pot).
struct LocalCandidate {
    int chart_id = 0;
    GridField v;  // box grid, unwrapped coordinates, mask = chart interior
    double delta_used = 0.0;
    double inner_margin = 0.0;
};

// Globally defined piece: equals the blended field on the chart box and
// u - 2 h_target outside it.
struct LocalPiece {
    int chart_id = 0;
    std::array<int, 6> lo{}, hi{};
    GridField box_field;
    std::vector<uint8_t> admissible_mask;  // box-local; strict admissibility claimed
    double delta_used = 0.0;
    double inner_margin = 0.0;
    double bullet1_margin = 0.0;  // min over box of (u + h - u_k)
    double bullet2_margin = 0.0;  // min over U' of (u_k - u)
    double bullet4_margin = 0.0;  // min admissibility margin on the claimed set
};

// (1/j) log sum exp(j v_i), evaluated in shifted form.
double smooth_max(std::span<const double> values, double j);

// Lifts u to the chart (u + rho_pot), solves the chart Dirichlet problem with
// boundary data pulled down by delta, downsampling to the half-resolution
// grid for the bulk of the work, and verifies v > u + rho_pot on the inner
// set. Halves delta and retries on failure (at most 20 times).
LocalCandidate local_solution(const GridField& u, const ChartCover& cover, int chart_id, int m,
                              const GlueConfig& cfg, const SolverConfig& solver_cfg);

// Blends v - rho_pot against the background u - 2 h_target with a smooth
// level-set cutoff and verifies the four piece properties.
LocalPiece modify_extend(const LocalCandidate& cand, const GridField& u,
                         const ChartCover& cover, int m, const GlueConfig& cfg);

double piece_value(const LocalPiece& piece, const GridField& u, double h_target,
                   std::span<const int> torus_idx);

struct GlueResult {
    GridField psi;
    double j_used = 0.0;
    ViolationReport sandwich;
    ViolationReport admissibility;
    double omega_margin_min = 0.0;
};

// psi = smooth_max of the pieces. Requires the inner sets to cover the grid
// (CoverError otherwise) and j >= ln(piece count)/h_target. Runs the sandwich
// and omega-admissibility checks and reports both outcomes.
GlueResult glue(const GridField& u, const ChartCover& cover,
                const std::vector<LocalPiece>& pieces, int m, const GlueConfig& cfg);

struct PipelineResult {
    ChartCover cover;
    std::vector<LocalPiece> pieces;
    GlueResult glued;
    int lattice_k = 0;
    int j_doublings = 0;
};

// Full smoothing pipeline: chart lattice sized from h_target, local solves,
// modification, gluing, verification. Doubles j (cap 2^20) while the glued
// field fails the strict admissibility margin.
PipelineResult smoothing_pipeline(const GridField& u, int m, const GlueConfig& cfg,
                                  const SolverConfig& solver_cfg, int lattice_k = 0);

// min over checked points of the cone margin of H(psi) + I (the flat-potential
// omega shift).
double omega_margin_min(const GridField& psi, int m);

}  // namespace hessianlab
