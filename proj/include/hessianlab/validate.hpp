#pragma once

#include <array>
#include <string>
#include <vector>

#include "hessianlab/grid.hpp"

namespace hessianlab {

enum class ViolationKind { cone, comparison, sandwich };

struct Violation {
    std::array<int, 6> index{};
    ViolationKind kind = ViolationKind::cone;
    double magnitude = 0.0;
};

struct ViolationReport {
    bool pass = true;
    double worst = 0.0;
    std::vector<Violation> violations;
    // Distinct from a violation: the check's hypotheses did not hold.
    bool precondition_met = true;
    std::string note;
};

// Pointwise cone test of the discrete complex Hessian: S_k(H u + shift I)
// >= -tol for k = 1..m at every interior point. For grid-smooth u this is
// the touching-function test up to O(h^2). `omega_shift` adds the flat local
// potential's Hessian, turning it into the omega-shifted admissibility test.
ViolationReport viscosity_check(const GridField& u, int m, double tol, double omega_shift = 0.0);

// Comparison principle: fu >= fv (within tol) and u <= v + tol on the collar
// imply u <= v + tol on the interior. Hypothesis failures are reported as
// precondition-not-met, not as violations.
ViolationReport comparison_check(const GridField& u, const GridField& v, const GridField& fu,
                                 const GridField& fv, int m, double tol);

// u - tol <= psi <= u + h + tol pointwise.
ViolationReport sandwich_check(const GridField& u, const GridField& psi, double h, double tol);

}  // namespace hessianlab
