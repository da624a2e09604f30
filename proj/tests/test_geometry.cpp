#include <doctest.h>

#include "kslab/error.hpp"
#include "kslab/geometry.hpp"
#include "kslab/rng.hpp"

#include <cmath>

using namespace kslab;

namespace {

// March x - s v in small steps, then bisect the first exit.
double marched_exit(const Domain& d, const Vec3& x, const Vec3& v, double step)
{
    double s = 0;
    while (d.contains(x - (s + step) * v)) s += step;
    double lo = s, hi = s + step;
    for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (lo + hi);
        (d.contains(x - m * v) ? lo : hi) = m;
    }
    return lo;
}

Vec3 random_interior(const Domain& d, Rng& r)
{
    if (d.kind == DomainKind::Rect2D) return {d.L * (2 * r.uniform() - 1), d.H() * r.uniform(), 0};
    const double rad = d.R * std::sqrt(r.uniform()), a = 2 * M_PI * r.uniform();
    return {d.L * (2 * r.uniform() - 1), rad * std::cos(a), rad * std::sin(a)};
}

} // namespace

TEST_CASE("boundary classification")
{
    const Domain d = Domain::cylinder(1, 1);
    CHECK(d.classify_boundary({1, 0.3, 0.2}).region == Region::Specular);
    CHECK(d.classify_boundary({0, 1, 0}).region == Region::Diffuse);
    const auto edge = d.classify_boundary({1, std::sqrt(0.5), std::sqrt(0.5)});
    CHECK(edge.region == Region::Specular);
    CHECK(edge.grazing);
    CHECK_THROWS_AS(d.classify_boundary({0, 0.5, 0}), Error);

    const Domain r = Domain::rect(1, 2);
    CHECK(r.classify_boundary({-1, 0.7, 0}).region == Region::Specular);
    CHECK(r.classify_boundary({0.2, 2, 0}).region == Region::Diffuse);
    CHECK(r.classify_boundary({0.2, 0, 0}).region == Region::Diffuse);
}

TEST_CASE("exit time examples")
{
    const Domain d = Domain::cylinder(1, 1);
    auto h = d.exit_time({0, 0, 0}, {1, 0, 0});
    CHECK(h.t_b == doctest::Approx(1).epsilon(1e-14));
    CHECK(h.x_b.x == doctest::Approx(-1));
    CHECK(h.region == Region::Specular);

    h = d.exit_time({0, 0, 0}, {0, 1, 0});
    CHECK(h.t_b == doctest::Approx(1).epsilon(1e-14));
    CHECK(h.x_b.y == doctest::Approx(-1));
    CHECK(h.region == Region::Diffuse);

    const Vec3 x{0.5, 0.2, 0}, v{1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0};
    h = d.exit_time(x, v);
    CHECK(std::abs(h.t_b - marched_exit(d, x, v, 1e-6)) < 1e-9);
    CHECK_THROWS_AS(d.exit_time(x, {0, 0, 0}), Error);
}

TEST_CASE("exit points lie on the boundary and the ray stays inside")
{
    for (const Domain& d : {Domain::cylinder(1, 1), Domain::rect(1, 2), Domain::cylinder(2, 0.5)}) {
        Rng r(3, d.kind == DomainKind::Rect2D ? 1 : 2);
        for (int k = 0; k < 20000; ++k) {
            const Vec3 x = random_interior(d, r);
            const Vec3 v{r.normal(), r.normal(), r.normal()};
            const BoundaryHit h = d.exit_time(x, v);
            REQUIRE(h.finite());
            CHECK(d.boundary_distance(h.x_b) < 1e-9 * std::max(d.L, d.R));
            CHECK(norm(h.x_b - (x - h.t_b * v)) < 1e-9);
            CHECK(std::abs(norm(h.normal) - 1) < 1e-14);
            if (k % 200 == 0)
                for (int s = 1; s < 100; ++s) CHECK(d.contains(x - (h.t_b * s / 100.0) * v, 1e-12));
        }
    }
}

TEST_CASE("exit time scales inversely with speed")
{
    const Domain d = Domain::cylinder(1, 1);
    Rng r(4, 4);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 x = random_interior(d, r);
        const Vec3 v{r.normal(), r.normal(), r.normal()};
        const double c = 0.1 + 5 * r.uniform();
        const double t1 = d.exit_time(x, v).t_b, t2 = d.exit_time(x, c * v).t_b;
        CHECK(std::abs(t2 * c - t1) <= 1e-12 * t1);
    }
}

TEST_CASE("axial rays agree between the slab and the cylinder")
{
    const Domain c = Domain::cylinder(1.5, 1), r = Domain::rect(1.5, 2);
    for (double x1 : {-1.2, 0.0, 0.7})
        for (double v1 : {-2.0, 0.3, 1.0}) {
            const auto a = c.exit_time({x1, 0.1, 0.0}, {v1, 0, 0});
            const auto b = r.exit_time({x1, 1.0, 0.0}, {v1, 0, 0});
            CHECK(a.t_b == doctest::Approx(b.t_b).epsilon(1e-14));
            CHECK(a.region == Region::Specular);
        }
}
