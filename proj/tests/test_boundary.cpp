#include <doctest.h>

#include "kslab/boundary.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/quadrature.hpp"

#include <cmath>
#include <memory>

using namespace kslab;

namespace {

// Half-space integral over {n.v > 0} (sign = +1) or {n.v < 0} (sign = -1)
// with Gauss-Legendre in a frame attached to n.
template <class F>
double half_space(const Vec3& n, int sign, F&& f)
{
    const Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 t1 = cross(n, a);
    t1 = (1.0 / norm(t1)) * t1;
    const Vec3 t2 = cross(n, t1);
    const auto& gl = gauss_legendre(48);
    const double B = 9;
    double s = 0;
    for (std::size_t i = 0; i < gl.x.size(); ++i)
        for (std::size_t j = 0; j < gl.x.size(); ++j)
            for (std::size_t k = 0; k < gl.x.size(); ++k) {
                const double c = sign * 0.5 * B * (gl.x[k] + 1);
                const Vec3 v = B * gl.x[i] * t1 + B * gl.x[j] * t2 + c * n;
                s += gl.w[i] * gl.w[j] * gl.w[k] * B * B * 0.5 * B * f(v);
            }
    return s;
}

// Same integral in spherical coordinates about n (independent rule).
template <class F>
double half_space_polar(const Vec3& n, int sign, F&& f)
{
    const Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 t1 = cross(n, a);
    t1 = (1.0 / norm(t1)) * t1;
    const Vec3 t2 = cross(n, t1);
    const auto& gr = gauss_legendre(40);
    const auto& gc = gauss_legendre(24);
    const int nphi = 48;
    const double R = 10;
    double s = 0;
    for (std::size_t i = 0; i < gr.x.size(); ++i) {
        const double r = 0.5 * R * (gr.x[i] + 1), wr = 0.5 * R * gr.w[i];
        for (std::size_t j = 0; j < gc.x.size(); ++j) {
            const double c = sign * 0.5 * (gc.x[j] + 1), wc = 0.5 * gc.w[j];
            const double sn = std::sqrt(1 - c * c);
            for (int k = 0; k < nphi; ++k) {
                const double p = 2 * M_PI * k / nphi;
                const Vec3 v = r * (c * n + sn * std::cos(p) * t1 + sn * std::sin(p) * t2);
                s += wr * wc * (2 * M_PI / nphi) * r * r * f(v);
            }
        }
    }
    return s;
}

} // namespace

TEST_CASE("specular reflection")
{
    const Vec3 r = specular_reflect({1, 0, 0}, {1, 2, 3});
    CHECK(r.x == -1);
    CHECK(r.y == 2);
    CHECK(r.z == 3);
    const Vec3 n{0, 0.6, 0.8};
    CHECK(norm(specular_reflect(n, n) + n) < 1e-15);
    const Vec3 t{1, 0.8, -0.6};
    CHECK(norm(specular_reflect(n, t) - t) < 1e-15);
    Rng rng(1, 31);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        CHECK(norm(specular_reflect(n, specular_reflect(n, v)) - v) < 1e-15 * (1 + norm(v)));
    }
}

TEST_CASE("diffuse sampler moments")
{
    const Vec3 n{0, -1, 0};
    Rng rng(2, 32);
    const int N = 400000;
    double sn = 0, sn2 = 0, sx = 0, sz = 0;
    for (int k = 0; k < N; ++k) {
        const Vec3 v = sample_diffuse(n, rng);
        const double vn = dot(n, v);
        REQUIRE(vn > 0);
        sn += vn;
        sn2 += vn * vn;
        sx += v.x;
        sz += v.z;
    }
    const double mean = sn / N, sd = std::sqrt(sn2 / N - mean * mean);
    // Reference: one dimensional quadrature of s^2 e^{-s^2/2}.
    const double ref = half_space({0, 0, 1}, 1, [](const Vec3& v) { return std::sqrt(2 * M_PI) * maxwellian(v) * v.z * v.z; });
    CHECK(ref == doctest::Approx(std::sqrt(M_PI / 2)).epsilon(1e-10));
    CHECK(std::abs(mean - ref) < 3 * sd / std::sqrt(double(N)));
    CHECK(std::abs(sx / N) < 4 / std::sqrt(double(N)));
    CHECK(std::abs(sz / N) < 4 / std::sqrt(double(N)));
}

TEST_CASE("wall measure has unit mass")
{
    for (const Vec3& n : {Vec3{0, 0, 1}, Vec3{0, 0.6, 0.8}})
        CHECK(std::abs(half_space(n, 1, [&](const Vec3& v) { return std::sqrt(2 * M_PI) * maxwellian(v) * dot(n, v); }) - 1) <
              1e-10);
}

TEST_CASE("change of variables under reflection")
{
    const Vec3 n{0, 0.6, 0.8};
    auto g = [](const Vec3& v) { return std::exp(-0.4 * norm2(v)) * (1 + v.x + 0.5 * v.y * v.z); };
    auto h = [](const Vec3& v) { return std::exp(-0.3 * norm2(v)) * (2 + std::sin(v.y)); };
    auto R = [&](const Vec3& v) { return specular_reflect(n, v); };
    const double lhs_d = half_space_polar(n, -1, [&](const Vec3& v) { return g(v) * dot(n, v); });
    const double rhs_d = -half_space(n, 1, [&](const Vec3& v) { return g(R(v)) * dot(n, v); });
    CHECK(std::abs(lhs_d - rhs_d) < 1e-9 * std::abs(lhs_d));
    const double lhs_s = half_space_polar(n, -1, [&](const Vec3& v) { return g(v) * h(R(v)) * dot(n, v); });
    const double rhs_s = -half_space(n, 1, [&](const Vec3& v) { return g(R(v)) * h(v) * dot(n, v); });
    CHECK(std::abs(lhs_s - rhs_s) < 1e-9 * std::abs(lhs_s));
}

TEST_CASE("discrete wall closure")
{
    auto g = std::make_shared<const VelocityGrid>(8, 4.0);
    Rng rng(3, 33);
    for (int axis = 0; axis < 3; ++axis)
        for (int sign : {-1, 1}) {
            DiscreteWall w(g, axis, sign);
            const auto sq = g->sample([](const Vec3& v) { return sqrt_maxwellian(v); });
            // Wall Maxwellian is a fixed point.
            const auto m = w.apply(sq, 1.0);
            for (std::size_t i : w.incoming()) CHECK(std::abs(m[i] - sq[i]) < 1e-14);
            std::vector<double> f(g->size());
            for (double& x : f) x = rng.normal();
            // alpha = 0: specular copy.
            const auto s = w.apply(f, 0.0);
            for (std::size_t i : w.incoming()) CHECK(s[i] == f[w.mirror(i)]);
            // Mass balance for every alpha.
            for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
                const auto c = w.apply(f, alpha);
                CHECK(std::abs(w.net_flux(c)) <= 1e-12 * std::abs(w.outgoing_flux(c)));
            }
            // Projection property of P_gamma.
            const auto p1 = w.project(f), p2 = w.project(p1);
            for (std::size_t i : w.outgoing()) CHECK(std::abs(p2[i] - p1[i]) < 1e-12 * (1 + std::abs(p1[i])));
            // Zero outgoing flux gives zero emission.
            std::vector<double> z(g->size(), 0.0);
            for (std::size_t i : w.outgoing()) z[i] = 1.0;
            const double phi = w.outgoing_flux(z);
            for (std::size_t i : w.outgoing()) z[i] -= phi / w.outgoing_flux(std::vector<double>(g->size(), 1.0));
            const auto e = w.apply(z, 1.0);
            for (std::size_t i : w.incoming()) CHECK(std::abs(e[i]) < 1e-12);
            // Discrete emission probabilities sum to one.
            double tot = 0;
            for (double p : w.emission_probabilities()) tot += p;
            CHECK(std::abs(tot - 1) < 1e-13);
        }
}

TEST_CASE("accommodation coefficients are validated")
{
    WallModel m;
    m.alpha_diffuse = 1.5;
    try {
        m.validate();
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationError);
        CHECK(std::string(e.what()).find("alpha must lie in [0,1]") != std::string::npos);
    }
}
