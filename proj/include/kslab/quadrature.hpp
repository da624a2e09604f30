#pragma once

#include <vector>

namespace kslab {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x, w;
};

const GaussRule& gauss_legendre(int n);

// Lebedev 26-point rule on the unit sphere; weights sum to 1.
struct SphereRule {
    std::vector<double> x, y, z, w;
};

const SphereRule& lebedev26();

// Product rule: Gauss-Legendre in cos(polar angle) times equispaced azimuth.
SphereRule sphere_product_rule(int n_polar, int n_azimuth);

} // namespace kslab
