#pragma once

#include "kslab/geometry.hpp"
#include "kslab/rng.hpp"
#include "kslab/velocity_grid.hpp"

#include <vector>

namespace kslab {

// R_n v = v - 2 (n.v) n
inline Vec3 specular_reflect(const Vec3& n, const Vec3& v) { return v - 2.0 * dot(n, v) * n; }

// Draw from dsigma = sqrt(2 pi) mu(v) (n.v) dv on {n.v > 0}: normal speed
// s = sqrt(-2 ln U), tangential components standard normal.
Vec3 sample_diffuse(const Vec3& n, Rng& rng);

// Maxwell accommodation coefficient, constant on each boundary region.
struct WallModel {
    double alpha_specular = 0.0;
    double alpha_diffuse = 1.0;
    double alpha(Region r) const { return r == Region::Specular ? alpha_specular : alpha_diffuse; }
    void validate() const; // ValidationError unless both lie in [0,1]
};

// Wall with an axis-aligned outward normal n = sign e_axis on a velocity
// grid. Outgoing nodes have n.v > 0. The diffuse emission weights are
// rescaled so that the discrete incoming mass flux equals the outgoing one.
class DiscreteWall {
public:
    DiscreteWall(GridPtr grid, int axis, int sign);

    const VelocityGrid& grid() const { return *grid_; }
    int axis() const { return axis_; }
    int sign() const { return sign_; }
    Vec3 normal() const;
    const std::vector<std::size_t>& outgoing() const { return out_; }
    const std::vector<std::size_t>& incoming() const { return in_; }
    // Partner of each node under the reflection R_n.
    std::size_t mirror(std::size_t idx) const { return grid_->reflect(idx, axis_); }

    // Phi = sum_{n.u>0} f sqrt(mu) (n.u) h^3
    double outgoing_flux(const std::vector<double>& f) const;
    // Net mass flux through the wall, sum_all sqrt(mu) f (n.v) h^3.
    double net_flux(const std::vector<double>& f) const;
    // Incoming values from outgoing ones:
    //   f(v) = alpha D sqrt(mu(v)) Phi + (1 - alpha) f(R v),  n.v < 0,
    // outgoing entries copied. D is the discrete normalisation.
    std::vector<double> apply(const std::vector<double>& f, double alpha) const;
    // In-place variant writing only the incoming entries.
    void close(double* f, double alpha) const;
    // Diffuse projection on the outgoing side: P f(v) = D sqrt(mu(v)) Phi(f), n.v > 0.
    std::vector<double> project(const std::vector<double>& f) const;

    // sum_{n.v<0} sqrt(2 pi) mu(v) |n.v| h^3 before rescaling.
    double raw_emission_mass() const { return raw_mass_; }
    double emission_norm() const { return D_; }

    // Emission weight of incoming node i, D sqrt(mu_i) |n.v_i| sqrt(mu_i) h^3;
    // these sum to 1 over the incoming set (discrete dsigma).
    const std::vector<double>& emission_probabilities() const { return prob_; }

private:
    GridPtr grid_;
    int axis_, sign_;
    std::vector<std::size_t> out_, in_;
    std::vector<double> sqmu_;
    std::vector<double> prob_;
    double raw_mass_ = 0, D_ = 0;
};

} // namespace kslab
