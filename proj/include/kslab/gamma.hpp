#pragma once

#include "kslab/parallel.hpp"
#include "kslab/quadrature.hpp"
#include "kslab/velocity_grid.hpp"

#include <functional>
#include <vector>

namespace kslab {

// Hard-sphere bilinear collision term on a velocity grid,
//   Gamma(g, f) = mu^{-1/2} Q(sqrt(mu) g, sqrt(mu) f),
// discretised in weak form: every pair of nodes (a, b) and direction omega
// moves mass from a to a' = a - ((a-b).omega) omega, and a' is deposited on
// nearby nodes with weights that reproduce every polynomial of degree <= 2
// (trilinear plus a second-difference fix per axis). Collisions whose
// post-collision pair leaves the node box are dropped from gain and loss
// alike, so Gamma(f, f) conserves mass, momentum and energy to rounding.
class GammaOperator {
public:
    explicit GammaOperator(GridPtr grid, const SphereRule& omega = lebedev26());

    const VelocityGrid& grid() const { return *grid_; }

    // Result is independent of the thread count (fixed chunking, ordered reduction).
    std::vector<double> apply(const std::vector<double>& g, const std::vector<double>& f,
                              Exec exec = Exec::Serial) const;

private:
    GridPtr grid_;
    std::vector<Vec3> dirs_;     // one direction per antipodal pair
    std::vector<double> dw_;     // 4 pi x (weight of both members)
    std::vector<double> sqmu_, isqmu_;
};

// Reference pairing int psi(v) Q(sqrt(mu) g, sqrt(mu) f)(v) dv computed from
// the same velocity sums but with psi evaluated exactly at the post-collision
// velocity (no deposition, no dropped collisions) and the given sphere rule.
double gamma_weak_pairing(const VelocityGrid& grid, const std::vector<double>& g, const std::vector<double>& f,
                          const std::function<double(const Vec3&)>& psi, const SphereRule& omega);

} // namespace kslab
