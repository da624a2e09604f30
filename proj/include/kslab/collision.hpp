#pragma once

#include "kslab/vec3.hpp"
#include "kslab/velocity_grid.hpp"

#include <array>
#include <vector>

namespace kslab {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kGradC1 = 0.3989422804014327; // 1/sqrt(2 pi)
constexpr double kGradC2 = 1.5957691216057308; // 4/sqrt(2 pi)
constexpr double kThetaDefault = 0.125;

double maxwellian(const Vec3& v);
double sqrt_maxwellian(const Vec3& v);
inline double velocity_weight(const Vec3& v, double theta) { return std::exp(theta * norm2(v)); }

// nu(v) = 2 pi int |v-u| mu(u) du, closed form in |v|.
double collision_frequency(double speed);
inline double collision_frequency(const Vec3& v) { return collision_frequency(norm(v)); }

// Grad hard-sphere kernel k = k2 - k1.
double grad_kernel(const Vec3& v, const Vec3& u);
// Same kernel written in polar variables around v: u = v + r e with
// e . v/|v| = c. Used by the quadratures that centre on the singularity.
double grad_kernel_polar(double speed, double r, double c);

enum class KthetaFilter { All, FarSpeed, NearSingular, FarOrNear };

// int |k(v,u)| e^{theta|v|^2 - theta|u|^2} du over the filtered region
// ({|u| > N}, {|v-u| <= 1/N} or their union).
double ktheta_integral(const Vec3& v, double theta, KthetaFilter filter = KthetaFilter::All, double N = 0);
// max over |v-u| > 1/N of |k(v,u)| e^{theta|v|^2 - theta|u|^2}, by dense sampling.
double ktheta_sup_away(const Vec3& v, double theta, double N);

// Orthonormal null-space basis: chi0 = sqrt(mu), chi_i = v_i sqrt(mu),
// chi4 = (|v|^2 - 3)/sqrt(6) sqrt(mu).
double chi(int m, const Vec3& v);
std::vector<double> chi_on_grid(const VelocityGrid& g, int m);

struct Projection {
    double a = 0;
    std::array<double, 3> b{0, 0, 0};
    double c = 0;
    std::vector<double> Pf;
};

Projection project_P(const VelocityGrid& g, const std::vector<double>& f);

} // namespace kslab
