#pragma once

#include "kslab/boundary.hpp"
#include "kslab/geometry.hpp"
#include "kslab/velocity_grid.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace kslab {

// Perturbation f on (cells of a Rect2D grid) x (velocity nodes). Only the
// nodes listed in `nodes` are stored; mult[k] is the number of grid nodes
// node k stands for (2 when v3 parity is used, else 1).
struct DistributionField {
    Domain domain;
    int nx1 = 0, nx2 = 0;
    GridPtr grid;
    std::vector<std::size_t> nodes;
    std::vector<double> mult;
    std::vector<double> data; // row-major [cell][k], cell = i2 * nx1 + i1

    std::size_t cells() const { return std::size_t(nx1) * nx2; }
    std::size_t nv() const { return nodes.size(); }
    double dx1() const { return 2 * domain.L / nx1; }
    double dx2() const { return domain.H() / nx2; }
    double cell_area() const { return dx1() * dx2(); }
    std::size_t cell(int i1, int i2) const { return std::size_t(i2) * nx1 + i1; }
    Vec3 center(std::size_t c) const
    {
        const int i1 = int(c % nx1), i2 = int(c / nx1);
        return {-domain.L + (i1 + 0.5) * dx1(), (i2 + 0.5) * dx2(), 0.0};
    }
    const double* at(std::size_t c) const { return data.data() + c * nv(); }
    double* at(std::size_t c) { return data.data() + c * nv(); }
    // Values of cell c on the full velocity grid.
    std::vector<double> expand(std::size_t c) const;
    // Reduced node list for a grid: all nodes, or v3 > 0 with multiplicity 2.
    static DistributionField make(const Domain& d, int nx1, int nx2, GridPtr grid, bool v3_parity);
};

// Burnett functions: A_ij = (v_i v_j - delta_ij |v|^2/3) sqrt(mu),
// B_j = v_j (|v|^2 - 5)/sqrt(10) sqrt(mu). Indices 0..2.
enum class BurnettKind { A, B };
std::vector<double> burnett(const VelocityGrid& g, BurnettKind kind, int i, int j = 0);

struct MomentField {
    std::vector<double> a, c;
    std::vector<std::array<double, 3>> b;
};
MomentField moments(const DistributionField& f);

struct Norms {
    double l2 = 0;       // ||f||_{L2(x,v)}
    double linf_w = 0;   // max e^{theta|v|^2} |f|
    double norm_a = 0, norm_b = 0, norm_c = 0;
    double norm_IP_nu = 0;  // ||nu (I-P) f||_{L2}
    double bdry_2plus = 0;  // |1_{diffuse} (1 - P_gamma) f|_{2,+}
    double mass = 0;        // sum sqrt(mu) f
};
Norms weighted_norms(const DistributionField& f, double theta);

// Outgoing-side boundary norm |g|_{2,+} on the diffuse walls, with g the
// wall-cell values, optionally after removing the diffuse projection.
double boundary_norm(const DistributionField& f, bool remove_projection);

struct DecayReport {
    double lambda = 0;
    double prefactor = 0;
    double r_squared = 0;
    double t_lo = 0, t_hi = 0;
    std::size_t points = 0;
    std::string norm_name;
    bool no_decay = false;
};
// Least squares of log(y) against t over t in [t_lo, t_hi].
DecayReport fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi,
                      const std::string& name = "");

// Balance of int psi f for psi = phi(x) chi_j(v) between consecutive snapshots:
//   [int psi f]_{s}^{t} - int_s^t ( int v.grad(phi) chi_j f - int_bdry psi f (n.v)
//                                   - int (L f) psi + int g psi ) dtau,
// time integrals by the trapezoid rule over the snapshot times.
struct TestFunction {
    std::function<double(const Vec3&)> phi;
    std::function<Vec3(const Vec3&)> grad_phi;
    int j = 0;
};
struct Snapshot {
    double t;
    DistributionField f;
};
struct WeakFormInputs {
    const std::vector<Snapshot>* snapshots = nullptr;
    WallModel wall;
    // (L chi_j) on the full grid for the operator used by the run
    std::vector<double> L_chi;
    // source value, may be empty
    std::function<double(double t, const Vec3& x, const Vec3& v)> g;
};
std::vector<double> weak_form_residual(const WeakFormInputs& in, const TestFunction& psi);

// Integral of psi f over the box for one snapshot.
double pair_with(const DistributionField& f, const TestFunction& psi);

} // namespace kslab
