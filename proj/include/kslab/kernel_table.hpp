#pragma once

#include "kslab/parallel.hpp"
#include "kslab/velocity_grid.hpp"

#include <cstddef>
#include <vector>

namespace kslab {

// Quadrature settings for the table rows. Each row is
//   K_ij = int k(v_i, u) sqrt(mu(u)) l_j(u) du / sqrt(mu(v_j)),
// l_j the tensor Lagrange cardinal function of node j, integrated in
// spherical coordinates centred on v_i with the polar axis along v_i.
// Functions of the form sqrt(mu) x polynomial of degree < lagrange_points
// (the null space among them) are reproduced exactly.
struct KernelTableOptions {
    int lagrange_points = 6;
    double r_panel = 1.5;   // radial panel width in units of h
    double c_width = 0.667; // polar panel width times max(|v|, 1) / h
    int gauss_points = 4;
    double phi_factor = 1.0;
    double tail = 4.0;      // integrate over |u| <= v_max + tail
    double theta = 0.125;
};

// One row of the product-integration matrix for velocity v (need not be a node).
std::vector<double> kernel_row(const VelocityGrid& g, const Vec3& v, const KernelTableOptions& opt);

// Representatives of the node orbits under the octahedral group (all
// components on the positive side, sorted descending) and orbit sizes.
struct OrbitSet {
    std::vector<std::size_t> reps;
    std::vector<int> orbit_size;
};
OrbitSet node_orbits(const VelocityGrid& g);

class KernelTable {
public:
    static KernelTable build(GridPtr grid, const KernelTableOptions& opt = {}, Exec exec = Exec::Parallel);

    const VelocityGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    std::size_t size() const { return grid_->size(); }
    double theta() const { return opt_.theta; }
    const KernelTableOptions& options() const { return opt_; }

    const std::vector<double>& K() const { return K_; }
    const std::vector<double>& nu() const { return nu_; }
    double K(std::size_t i, std::size_t j) const { return K_[i * size() + j]; }

private:
    GridPtr grid_;
    KernelTableOptions opt_;
    std::vector<double> K_;
    std::vector<double> nu_;
};

// (Lf)_i = nu_i f_i - sum_j K_ij f_j
std::vector<double> apply_L(const KernelTable& t, const std::vector<double>& f);

// Operator used by the time stepper. The product-integration matrix is
// accurate applied to smooth functions but not symmetric; the stepper needs
// a symmetric operator whose null space is exactly span{chi_0..chi_4} so
// that mass is conserved and the L2 energy cannot grow. With
// Ls = diag(nu) - (K + K^T)/2 and Q the orthogonal projector onto the
// complement of the grid null space:
//   L~ = Q Ls Q.
struct CorrectedOperator {
    GridPtr grid;
    std::vector<double> L;  // dense, row-major, symmetric
    std::vector<double> nu; // nu at the nodes
    double correction = 0;  // max_m ||L chi_m|| / ||chi_m|| of the raw table
    double asymmetry = 0;   // ||K - K^T|| / ||K|| of the raw table
    std::size_t size() const { return nu.size(); }
    double entry(std::size_t i, std::size_t j) const { return L[i * nu.size() + j]; }
    // Gain part: Kt = diag(nu) - L~.
    double K(std::size_t i, std::size_t j) const { return (i == j ? nu[i] : 0.0) - entry(i, j); }
};

CorrectedOperator correct_operator(const KernelTable& t);
std::vector<double> apply_L(const CorrectedOperator& op, const std::vector<double>& f);

// ||L chi_m|| / ||chi_m|| for m = 0..4 computed from orbit representative
// rows only (matrix free), usable on grids too large for a dense table.
// The three momentum modes share one value by symmetry.
std::vector<double> null_space_residuals(const VelocityGrid& g, const KernelTableOptions& opt,
                                         Exec exec = Exec::Parallel);

} // namespace kslab
