#include <doctest.h>

#include "kslab/collision.hpp"
#include "kslab/dvm_solver.hpp"
#include "kslab/error.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace kslab;

namespace {

std::shared_ptr<const CorrectedOperator> small_op()
{
    static auto op = std::make_shared<const CorrectedOperator>(
        correct_operator(KernelTable::build(std::make_shared<const VelocityGrid>(8, 4.0))));
    return op;
}

DvmSetup small_setup()
{
    DvmSetup s;
    s.nx1 = 12;
    s.nx2 = 10;
    return s;
}

double sup(const std::vector<double>& x)
{
    double m = 0;
    for (double y : x) m = std::max(m, std::abs(y));
    return m;
}

} // namespace

TEST_CASE("zero is an exact fixed point")
{
    DvmSolver s(small_setup(), small_op());
    s.set_initial([](const Vec3&, const Vec3&) { return 0.0; });
    for (int k = 0; k < 5; ++k) s.step();
    CHECK(sup(s.field().data) == 0.0);
}

TEST_CASE("mass is conserved per step for every scheme and wall mix")
{
    for (auto sp : {SpatialScheme::Upwind, SpatialScheme::Minmod})
        for (auto cs : {CollisionScheme::Exponential, CollisionScheme::Explicit, CollisionScheme::SemiImplicit})
            for (double a : {0.0, 0.4, 1.0}) {
                DvmSetup st = small_setup();
                st.scheme = sp;
                st.collision = cs;
                st.wall.alpha_specular = a;
                st.wall.alpha_diffuse = 1 - 0.5 * a;
                st.dt = 0.05;
                DvmSolver s(st, small_op());
                s.set_initial([](const Vec3& x, const Vec3& v) {
                    return sqrt_maxwellian(v) * (1 + 0.5 * std::sin(2 * x.x + x.y) * (1 + v.x * v.y));
                });
                double prev = s.mass();
                const double scale = std::abs(prev);
                for (int k = 0; k < 6; ++k) {
                    s.step();
                    CHECK(std::abs(s.mass() - prev) <= 1e-12 * scale);
                    prev = s.mass();
                }
            }
}

TEST_CASE("upwind transport moves the centroid at the node velocity")
{
    DvmSetup st = small_setup();
    st.nx1 = 60;
    st.collisions = false;
    DvmSolver s(st, small_op());
    const auto& f = s.field();
    const std::size_t k = 0;
    const double c = f.grid->node(f.nodes[k]).x;
    // Bump in the middle, one velocity only.
    for (std::size_t cell = 0; cell < f.cells(); ++cell) {
        const double x = f.center(cell).x;
        s.field().at(cell)[k] = std::abs(x) < 0.2 ? 1.0 : 0.0;
    }
    auto stats = [&](double& m, double& cx) {
        m = 0;
        cx = 0;
        for (std::size_t cell = 0; cell < f.cells(); ++cell) {
            m += f.at(cell)[k];
            cx += f.at(cell)[k] * f.center(cell).x;
        }
        cx /= m;
    };
    double m0, x0, m1, x1;
    stats(m0, x0);
    const double dt = 0.5 * s.max_transport_dt();
    for (int n = 0; n < 10; ++n) s.sweep(0, dt);
    stats(m1, x1);
    CHECK(std::abs(m1 - m0) < 1e-12 * m0);
    CHECK(x1 == doctest::Approx(x0 + 10 * dt * c).epsilon(1e-12));
    CHECK_THROWS_AS(s.sweep(0, 2 * s.max_transport_dt()), Error);
}

TEST_CASE("collision-only relaxation matches a high-order ODE solve")
{
    DvmSetup st = small_setup();
    st.nx1 = st.nx2 = 4;
    st.transport = false;
    st.wall.alpha_diffuse = 0;
    st.dt = 0.02;
    DvmSolver s(st, small_op());
    s.set_initial([](const Vec3&, const Vec3& v) { return sqrt_maxwellian(v) * (0.3 * chi(4, v) / sqrt_maxwellian(v) + v.x * v.y + 0.2 * v.z * v.z); });
    const auto& P = s.propagator();
    const std::size_t n = P.size();
    std::vector<double> y(s.field().at(0), s.field().at(0) + n);
    auto rhs = [&](const std::vector<double>& a) {
        std::vector<double> r(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) r[i] -= P.L()[i * n + j] * a[j];
        return r;
    };
    const auto& f = s.field();
    auto form = [&](const double* a) {
        double q = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) q += f.mult[i] * a[i] * P.L()[i * n + j] * a[j];
        return q;
    };
    std::vector<double> c0(5);
    for (int m = 0; m < 5; ++m) {
        double acc = 0;
        for (std::size_t k = 0; k < n; ++k) acc += f.mult[k] * chi(m, f.grid->node(f.nodes[k])) * f.at(0)[k];
        c0[m] = acc;
    }
    for (int step = 0; step < 10; ++step) {
        CHECK(form(s.field().at(0)) >= -1e-12);
        s.step();
        // RK4 with 20 substeps per step.
        const double h = st.dt / 20;
        for (int q = 0; q < 20; ++q) {
            auto k1 = rhs(y);
            std::vector<double> t(n);
            for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + 0.5 * h * k1[i];
            auto k2 = rhs(t);
            for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + 0.5 * h * k2[i];
            auto k3 = rhs(t);
            for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + h * k3[i];
            auto k4 = rhs(t);
            for (std::size_t i = 0; i < n; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
    }
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(y[i] - s.field().at(0)[i]));
    CHECK(d < 1e-10 * sup(y));
    // v3 momentum vanishes by parity and has no stored representative.
    for (int m : {0, 1, 2, 4}) {
        double acc = 0;
        for (std::size_t k = 0; k < n; ++k) acc += f.mult[k] * chi(m, f.grid->node(f.nodes[k])) * f.at(0)[k];
        CHECK(std::abs(acc - c0[m]) < 1e-12 * (1 + std::abs(c0[m])));
    }
}

TEST_CASE("explicit and semi-implicit steps approach the exponential step")
{
    auto run = [](CollisionScheme cs, double dt) {
        DvmSetup st = small_setup();
        st.collision = cs;
        st.dt = dt;
        DvmSolver s(st, small_op());
        s.set_initial([](const Vec3& x, const Vec3& v) { return sqrt_maxwellian(v) * std::cos(x.y) * v.x * v.x; });
        const int n = int(std::lround(0.2 / dt));
        for (int k = 0; k < n; ++k) s.step();
        return s.field().data;
    };
    auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
        return d;
    };
    const auto ref = run(CollisionScheme::Exponential, 0.005);
    const double e1 = dist(run(CollisionScheme::SemiImplicit, 0.01), ref);
    const double e2 = dist(run(CollisionScheme::SemiImplicit, 0.005), ref);
    CHECK(e2 < e1);
    CHECK(dist(run(CollisionScheme::Explicit, 0.005), ref) < 0.05 * sup(ref));
}

TEST_CASE("non-finite values are reported with their location")
{
    DvmSolver s(small_setup(), small_op());
    s.set_initial([](const Vec3& x, const Vec3&) { return x.x > 0.5 && x.y > 1.5 ? NAN : 0.0; });
    try {
        s.step();
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
        CHECK(std::string(e.what()).find("cell") != std::string::npos);
    }
}

TEST_CASE("initial data odd in v3 is rejected under the parity reduction")
{
    DvmSolver s(small_setup(), small_op());
    CHECK_THROWS_AS(s.set_initial([](const Vec3&, const Vec3& v) { return v.z * sqrt_maxwellian(v); }), Error);
}

TEST_CASE("parity reduction agrees with the full velocity set")
{
    auto run = [](bool parity) {
        DvmSetup st = small_setup();
        st.v3_parity = parity;
        st.scheme = SpatialScheme::Minmod;
        DvmSolver s(st, small_op());
        s.set_initial([](const Vec3& x, const Vec3& v) { return sqrt_maxwellian(v) * std::cos(x.y) * (1 + v.x + v.z * v.z); });
        for (int k = 0; k < 5; ++k) s.step();
        return weighted_norms(s.field(), 0.125);
    };
    const Norms a = run(true), b = run(false);
    CHECK(a.l2 == doctest::Approx(b.l2).epsilon(1e-10));
    CHECK(a.mass == doctest::Approx(b.mass).epsilon(1e-10));
    CHECK(a.bdry_2plus == doctest::Approx(b.bdry_2plus).epsilon(1e-10));
}

TEST_CASE("run output: decay, determinism, csv and binary dump")
{
    RunConfig c;
    c.velocity_n = 8;
    c.velocity_vmax = 4;
    c.nx1 = c.nx2 = 8;
    c.t_end = 6;
    RunOptions o;
    o.op = small_op();
    const RunResult a = run_dvm(c, o), b = run_dvm(c, o);
    CHECK(diagnostics_csv(a.rows) == diagnostics_csv(b.rows));
    CHECK(diagnostics_csv(a.rows).rfind("t,l2,linf_w,norm_a,norm_b,norm_c,norm_IP_nu,bdry_2plus,mass\n", 0) == 0);
    REQUIRE(a.fit_ok);
    CHECK(a.fit_l2.lambda > 0);
    CHECK(a.max_mass_drift < 1e-10);

    const std::string path = (std::filesystem::temp_directory_path() / "kslab_dump_test.bin").string();
    write_field_binary(path, a.final_field);
    const DistributionField back = read_field_binary(path, a.final_field.domain);
    CHECK(back.data == a.final_field.data);
    CHECK(back.nodes == a.final_field.nodes);
    CHECK(back.mult == a.final_field.mult);
    std::remove(path.c_str());

    RunConfig z = c;
    z.initial_kind = "zero";
    const RunResult rz = run_dvm(z, o);
    for (const auto& row : rz.rows) {
        CHECK(row.n.l2 == 0);
        CHECK(row.n.linf_w == 0);
        CHECK(row.n.bdry_2plus == 0);
    }
}

TEST_CASE("Picard iteration")
{
    RunConfig c;
    c.velocity_n = 8;
    c.velocity_vmax = 4;
    c.nx1 = c.nx2 = 4;
    c.t_end = 0.5;
    c.initial_kind = "smooth";
    c.initial_eps = 0.05;
    RunOptions o;
    o.op = small_op();

    RunConfig z = c;
    z.initial_kind = "zero";
    const PicardResult pz = picard_iterate(z, 3, o);
    for (const auto& f : pz.finals) CHECK(sup(f.data) == 0.0);

    const PicardResult p = picard_iterate(c, 4, o);
    for (double r : p.ratios) CHECK(r < 1);
    RunConfig n = c;
    n.nonlinear = true;
    const RunResult direct = run_dvm(n, o);
    double d = 0;
    for (std::size_t i = 0; i < direct.final_field.data.size(); ++i)
        d = std::max(d, std::abs(direct.final_field.data[i] - p.limit.data[i]));
    CHECK(d < 1e-3 * sup(direct.final_field.data));
}
