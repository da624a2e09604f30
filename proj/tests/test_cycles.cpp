#include <doctest.h>

#include "kslab/boundary.hpp"
#include "kslab/cycles.hpp"
#include "kslab/error.hpp"

#include <cmath>

using namespace kslab;

TEST_CASE("chain to the lateral wall without cap hits")
{
    const Domain d = Domain::cylinder(1, 1);
    const SpecularChain c = trace_specular_chain(d, {0, 0, 0}, {0, 1, 0}, 5);
    CHECK(c.M == 0);
    REQUIRE(c.arrived);
    CHECK(c.arrival_t == doctest::Approx(4));
    CHECK(c.arrival_x.y == doctest::Approx(-1));
    CHECK_THROWS_AS(trace_specular_chain(d, {0, 0, 0}, {0, 0, 0}, 5), Error);
}

TEST_CASE("chain with many cap hits matches a dense reflecting integrator")
{
    const Domain d = Domain::cylinder(1, 1);
    const Vec3 v{2, 0.1, 0};
    const SpecularChain c = trace_specular_chain(d, {0, 0, 0}, v, 10);
    REQUIRE(c.arrived);
    // Backward march with step ds, reflecting v1 at the caps.
    const double ds = 1e-6;
    Vec3 x{0, 0, 0}, u = v;
    double s = 0;
    int hits = 0;
    while (std::hypot(x.y, x.z) < 1) {
        x = x - ds * u;
        s += ds;
        if (std::abs(x.x) > 1) {
            x.x = std::copysign(2.0, x.x) - x.x;
            u.x = -u.x;
            ++hits;
        }
    }
    CHECK(c.M == hits);
    CHECK(std::abs((10 - c.arrival_t) - s) < 1e-5);
    CHECK(norm(c.arrival_x - x) < 1e-4);
    for (int j = 1; j <= c.M; ++j) {
        CHECK(std::abs(std::abs(c.entries[j].x.x) - 1) < 1e-12);
        CHECK(c.entries[j].t < c.entries[j - 1].t);
        if (j > 1) CHECK(c.entries[j].v.x == -c.entries[j - 1].v.x);
        CHECK(std::abs(norm(c.entries[j].v) - norm(v)) < 1e-12 * norm(v));
    }
}

TEST_CASE("axial rays are truncated at the documented cap")
{
    const Domain d = Domain::cylinder(1, 1);
    const SpecularChain c = trace_specular_chain(d, {0.2, 0, 0}, {1, 0, 0}, 7);
    CHECK(c.truncated);
    CHECK(c.M == int(std::ceil(1.0 * 7 / 2)) + 2);
}

TEST_CASE("cycles reach time zero before the first hit")
{
    const Domain d = Domain::cylinder(1, 1);
    Rng rng(1, 41);
    const CycleRecord r = trace_cycles(d, {0, 0, 0}, {0.5, 0.2, 0.1}, 0.01, rng, 10);
    CHECK(r.terminal == Terminal::ReachedTimeZero);
    CHECK(r.n_diffuse() == 0);
}

TEST_CASE("cycle records are reproducible and consistent")
{
    const Domain d = Domain::cylinder(1, 1);
    for (int k = 0; k < 200; ++k) {
        Rng a(9, stream_id(1, k)), b(9, stream_id(1, k));
        const Vec3 x{0.3, 0.1, -0.2}, v{a.normal(), a.normal(), a.normal()};
        b.normal();
        b.normal();
        b.normal();
        const CycleRecord r1 = trace_cycles(d, x, v, 20, a, 50);
        const CycleRecord r2 = trace_cycles(d, x, v, 20, b, 50);
        REQUIRE(r1.n_diffuse() == r2.n_diffuse());
        for (std::size_t i = 0; i < r1.n_diffuse(); ++i) {
            const auto& e = r1.events[i];
            CHECK(e.t == r2.events[i].t);
            CHECK(norm(e.v - r2.events[i].v) == 0);
            CHECK(d.classify_boundary(e.x).region == Region::Diffuse);
            CHECK(std::abs(norm(e.v_pre) - (i == 0 ? norm(v) : norm(r1.events[i - 1].v))) < 1e-12 * norm(e.v_pre));
            CHECK(dot(e.v, e.normal) > 0); // x - s v re-enters the domain
            if (i > 0) CHECK(e.t < r1.events[i - 1].t);
            // Continuity of X at the event.
            const PhasePoint p = eval_XV(r1, e.t);
            CHECK(norm(p.X - e.x) < 1e-9);
        }
    }
}

TEST_CASE("eval_XV: continuity at cap hits and containment")
{
    const Domain d = Domain::rect(1, 2);
    Rng rng(2, 42);
    for (int k = 0; k < 500; ++k) {
        const Vec3 x{2 * rng.uniform() - 1, 2 * rng.uniform(), 0};
        const Vec3 v{3 * rng.normal(), rng.normal(), rng.normal()};
        const CycleRecord r = trace_cycles(d, x, v, 5, rng, 20);
        for (const auto& leg : r.legs)
            for (int j = 1; j <= leg.M; ++j) {
                const double t = leg.entries[j].t;
                const PhasePoint a = eval_XV(r, t + 1e-9), b = eval_XV(r, t - 1e-9);
                CHECK(norm(a.X - b.X) < 1e-8 * (1 + norm(v)) * 10);
                CHECK(a.V.x == doctest::Approx(-b.V.x));
            }
        for (int q = 0; q < 10; ++q) {
            const double s = r.t_min() + (r.t0 - r.t_min()) * rng.uniform();
            CHECK(d.contains(eval_XV(r, s).X, 1e-9));
        }
        CHECK_THROWS_AS(eval_XV(r, r.t0 + 1), Error);
    }
}

TEST_CASE("axial fold")
{
    Fold f = unfold_axial(0.3, 1);
    CHECK(f.x1 == doctest::Approx(0.3));
    CHECK(f.sign == 1);
    f = unfold_axial(1.5, 1);
    CHECK(f.x1 == doctest::Approx(0.5));
    CHECK(f.sign == -1);
    f = unfold_axial(3.0, 1);
    CHECK(f.x1 == doctest::Approx(-1.0));
    // Against a step-by-step reflecting tracer of an axial ray from 0.
    for (double y : {0.7, 2.2, 5.9, -3.3}) {
        double x = 0, dir = y > 0 ? 1 : -1;
        const int n = 200000;
        const double ds = std::abs(y) / n;
        for (int i = 0; i < n; ++i) {
            x += dir * ds;
            if (std::abs(x) > 1) {
                x = std::copysign(2.0, x) - x;
                dir = -dir;
            }
        }
        CHECK(std::abs(unfold_axial(y, 1).x1 - x) < 1e-8);
    }
}

TEST_CASE("bounce tail is non-increasing")
{
    const Domain d = Domain::cylinder(1, 1);
    std::vector<int> n;
    for (int k = 0; k < 300; ++k) {
        Rng r(3, stream_id(43, k));
        const Vec3 x{0.2, 0.1, 0}, v{r.normal(), r.normal(), r.normal()};
        n.push_back(int(trace_cycles(d, x, v, 20, r, 400).n_diffuse()));
    }
    double prev = 1;
    for (int k = 1; k < 60; ++k) {
        const double p = double(std::count_if(n.begin(), n.end(), [k](int c) { return c >= k; })) / n.size();
        CHECK(p <= prev);
        prev = p;
    }
}
