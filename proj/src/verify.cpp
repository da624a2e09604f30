#include "kslab/verify.hpp"
#include "kslab/boundary.hpp"
#include "kslab/collision.hpp"
#include "kslab/config.hpp"
#include "kslab/cycles.hpp"
#include "kslab/diagnostics.hpp"
#include "kslab/duhamel_mc.hpp"
#include "kslab/dvm_solver.hpp"
#include "kslab/gamma.hpp"
#include "kslab/kernel_table.hpp"
#include "kslab/quadrature.hpp"
#include "kslab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace kslab {

namespace {

void add(std::vector<Check>& out, const std::string& id, double value, double bound, bool pass)
{
    out.push_back({id, value, bound, pass});
}
void add_le(std::vector<Check>& out, const std::string& id, double value, double bound)
{
    add(out, id, value, bound, std::isfinite(value) && value <= bound);
}

void velocity_checks(std::vector<Check>& out, const BatteryOptions& o)
{
    // Moment facts on the default grid (cheap, so always at full size).
    VelocityGrid g(16, 6.0);
    KahanSum m0, m2, m22, m4;
    for (const Vec3& v : g.nodes()) {
        const double w = maxwellian(v) * g.weight();
        m0.add(w);
        m2.add(v.x * v.x * w);
        m22.add(v.x * v.x * v.y * v.y * w);
        m4.add(v.x * v.x * v.x * v.x * w);
    }
    add_le(out, "velocity.moment_mass", std::abs(m0.value() - 1), 1e-6);
    add_le(out, "velocity.moment_v2", std::abs(m2.value() - 1), 1e-6);
    add_le(out, "velocity.moment_v2v2", std::abs(m22.value() - 1), 1e-6);
    // The fourth moment cannot beat its own truncated tail beyond v_max.
    const double a = g.v_max(), phi = std::exp(-0.5 * a * a) / std::sqrt(2 * M_PI), q = 0.5 * std::erfc(a / std::sqrt(2.0));
    const double tail4 = 2 * (phi * (a * a * a + 3 * a) + 3 * q);
    add_le(out, "velocity.moment_v4", std::abs(m4.value() - 3), std::max(1e-6, tail4));
    add_le(out, "velocity.nu_at_zero", std::abs(collision_frequency(0.0) - 4 * std::sqrt(2 * M_PI)), 1e-9);

    Rng rng(o.seed, 11);
    double worst = 0;
    const int pairs = o.quick ? 10000 : 100000;
    for (int k = 0; k < pairs; ++k) {
        const Vec3 v{3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal()};
        const Vec3 u{3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal()};
        const double a = grad_kernel(v, u), b = grad_kernel(u, v);
        if (a != 0) worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
    add_le(out, "kernel.symmetry", worst, 1e-12);
}

void operator_checks(std::vector<Check>& out, const BatteryOptions& o)
{
    const int n = o.quick ? 8 : 16;
    const double vmax = o.quick ? 4.0 : 6.0;
    auto grid = std::make_shared<const VelocityGrid>(n, vmax);
    const KernelTable table = KernelTable::build(grid);
    const CorrectedOperator op = correct_operator(table);
    add_le(out, "operator.null_space_raw", op.correction, 1e-3);

    double null = 0;
    for (int m = 0; m < 5; ++m) {
        const auto c = chi_on_grid(*grid, m);
        null = std::max(null, grid->l2(apply_L(op, c)) / grid->l2(c));
    }
    add_le(out, "operator.null_space_corrected", null, 1e-10);

    Rng rng(o.seed, 12);
    double min_form = 1e300, min_ratio = 1e300;
    const int trials = o.quick ? 200 : 1000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> f(grid->size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal() * std::exp(-0.1 * norm2(grid->node(i)));
        const auto Lf = apply_L(op, f);
        const double form = grid->inner(Lf, f) / grid->inner(f, f);
        const Projection P = project_P(*grid, f);
        double ip = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double r = f[i] - P.Pf[i];
            ip += op.nu[i] * r * r * grid->weight();
        }
        min_form = std::min(min_form, form);
        min_ratio = std::min(min_ratio, grid->inner(Lf, f) / ip);
    }
    add(out, "operator.form_nonnegative", min_form, -1e-8, min_form >= -1e-8);
    add(out, "operator.coercivity", min_ratio, 0.0, min_ratio > 0);

    GammaOperator gamma(grid);
    double cons = 0;
    for (int t = 0; t < 3; ++t) {
        std::vector<double> f(grid->size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal() * sqrt_maxwellian(grid->node(i));
        const auto q = gamma.apply(f, f);
        double scale = 0;
        for (double x : q) scale = std::max(scale, std::abs(x));
        for (int m = 0; m < 5; ++m) cons = std::max(cons, std::abs(grid->inner(q, chi_on_grid(*grid, m))) / scale);
    }
    add_le(out, "gamma.conservation", cons, 1e-12);

    const auto A = burnett(*grid, BurnettKind::A, 0, 1);
    double proj = 0;
    for (int m = 0; m < 5; ++m) proj = std::max(proj, std::abs(grid->inner(A, chi_on_grid(*grid, m))));
    add_le(out, "burnett.A12_orthogonal", proj, 1e-12);
}

void wall_checks(std::vector<Check>& out, const BatteryOptions& o)
{
    // Continuous wall measure mass by tensor Gauss-Legendre on a box.
    const GaussRule& gl = gauss_legendre(64);
    const double B = 10;
    KahanSum mass;
    for (std::size_t a = 0; a < gl.x.size(); ++a)
        for (std::size_t b = 0; b < gl.x.size(); ++b)
            for (std::size_t c = 0; c < gl.x.size(); ++c) {
                const Vec3 v{B * gl.x[a], B * gl.x[b], 0.5 * B * (gl.x[c] + 1)};
                mass.add(std::sqrt(2 * M_PI) * maxwellian(v) * v.z * B * B * 0.5 * B * gl.w[a] * gl.w[b] * gl.w[c]);
            }
    add_le(out, "wall.dsigma_mass", std::abs(mass.value() - 1), 1e-10);

    Rng rng(o.seed, 13);
    const std::size_t ns = o.quick ? 100000 : 1000000;
    const Vec3 n{0, 0.6, 0.8};
    KahanSum s, s2;
    for (std::size_t k = 0; k < ns; ++k) {
        const double x = dot(n, sample_diffuse(n, rng));
        s.add(x);
        s2.add(x * x);
    }
    const double mean = s.value() / double(ns);
    const double se = std::sqrt((s2.value() / double(ns) - mean * mean) / double(ns));
    add_le(out, "wall.sampler_mean_sigmas", std::abs(mean - std::sqrt(M_PI / 2)) / se, 3.0);

    auto grid = std::make_shared<const VelocityGrid>(o.quick ? 8 : 16, o.quick ? 4.0 : 6.0);
    double bal = 0;
    for (int axis = 0; axis < 3; ++axis)
        for (int sign : {-1, 1}) {
            DiscreteWall w(grid, axis, sign);
            std::vector<double> f(grid->size());
            for (double& x : f) x = rng.normal();
            for (double alpha : {0.0, 0.3, 1.0}) {
                const auto g = w.apply(f, alpha);
                bal = std::max(bal, std::abs(w.net_flux(g) / w.outgoing_flux(g)));
            }
        }
    add_le(out, "wall.mass_balance", bal, 1e-12);
}

void cycle_checks(std::vector<Check>& out, const BatteryOptions& o)
{
    const Domain d = Domain::rect(1, 2);
    Rng rng(o.seed, 14);
    const int n = o.quick ? 10000 : 100000;
    double unfold = 0, energy = 0;
    for (int k = 0; k < n; ++k) {
        const Vec3 x{2 * rng.uniform() - 1, 2 * rng.uniform(), 0};
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double t = 5 * rng.uniform();
        const SpecularChain ch = trace_specular_chain(d, x, v, t, {true});
        const double t_end = ch.arrived ? ch.arrival_t : (ch.reached_zero ? 0.0 : ch.entries.back().t);
        const double s = t_end + (t - t_end) * rng.uniform();
        CycleRecord rec;
        rec.x0 = x;
        rec.v0 = v;
        rec.t0 = t;
        rec.legs.push_back(ch);
        rec.terminal = Terminal::ReachedTimeZero;
        if (s < rec.t_min()) continue;
        const PhasePoint p = eval_XV(rec, s);
        const Fold f = unfold_axial(x.x - (t - s) * v.x, d.L);
        unfold = std::max(unfold, std::abs(f.x1 - p.X.x));
        unfold = std::max(unfold, std::abs(p.X.y - (x.y - (t - s) * v.y)));
        unfold = std::max(unfold, std::abs(p.V.x - f.sign * v.x));
        for (const auto& e : ch.entries) energy = std::max(energy, std::abs(norm(e.v) - norm(v)) / norm(v));
    }
    add_le(out, "cycles.unfolding", unfold, 1e-9 * d.L);
    add_le(out, "cycles.energy", energy, 1e-12);

    // Bounce tail at T0 = 50.
    const int trajectories = o.quick ? 300 : 2000;
    const Domain cyl = Domain::cylinder(1, 1);
    std::vector<int> counts(trajectories);
    for (int k = 0; k < trajectories; ++k) {
        Rng r(o.seed, stream_id(15, std::uint64_t(k)));
        const Vec3 x{0.5 * (2 * r.uniform() - 1), 0, 0};
        const Vec3 v{r.normal(), r.normal(), r.normal()};
        counts[k] = int(trace_cycles(cyl, x, v, 50.0, r, 400).n_diffuse());
    }
    bool monotone = true;
    double prev = 2;
    std::vector<double> ks, ls;
    for (int kk = 5; kk <= 50; ++kk) {
        const double p = double(std::count_if(counts.begin(), counts.end(), [kk](int c) { return c >= kk; })) / trajectories;
        if (p > prev) monotone = false;
        prev = p;
        if (p > 0) {
            ks.push_back(kk);
            ls.push_back(std::log(p));
        }
    }
    add(out, "cycles.tail_monotone", monotone ? 1 : 0, 1, monotone);
    double slope = 0;
    if (ks.size() >= 2) {
        double mk = 0, ml = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            mk += ks[i];
            ml += ls[i];
        }
        mk /= double(ks.size());
        ml /= double(ks.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            sxy += (ks[i] - mk) * (ls[i] - ml);
            sxx += (ks[i] - mk) * (ks[i] - mk);
        }
        slope = sxy / sxx;
    }
    add(out, "cycles.tail_log_slope", slope, 0.0, slope < 0);
}

void diagnostics_checks(std::vector<Check>& out)
{
    std::vector<double> t, y;
    for (int i = 0; i < 50; ++i) {
        t.push_back(0.2 * i);
        y.push_back(3 * std::exp(-0.5 * t.back()));
    }
    const DecayReport r = fit_decay(t, y, 0, 10);
    add_le(out, "fit.synthetic_lambda", std::abs(r.lambda - 0.5), 1e-12);
    add_le(out, "fit.synthetic_r2", std::abs(r.r_squared - 1), 1e-12);

    RunConfig c;
    c.L = 1.25;
    c.wall.alpha_specular = 0.3;
    c.theta = 0.1;
    const RunConfig back = parse_config_text(serialize(c));
    add(out, "config.roundtrip", serialize(back) == serialize(c) ? 0 : 1, 0, serialize(back) == serialize(c));

    const auto o = philox4x32_10({0, 0, 0, 0}, {0, 0});
    const bool kat = o[0] == 0x6627e8d5u && o[1] == 0xe169c58du && o[2] == 0xbc57ac4cu && o[3] == 0x9b00dbd8u;
    add(out, "rng.philox_kat", kat ? 0 : 1, 0, kat);
}

void solver_checks(std::vector<Check>& out, const BatteryOptions& o)
{
    RunConfig c;
    c.velocity_n = 8;
    c.velocity_vmax = 4;
    c.nx1 = c.nx2 = 16;
    c.t_end = o.quick ? 8 : 16;
    c.output_every = 0.2;
    auto op = build_operator(c);
    RunOptions ro;
    ro.op = op;
    const RunResult r = run_dvm(c, ro);
    add_le(out, "dvm.mass_drift", r.max_mass_drift, 1e-10);
    add(out, "dvm.decay_lambda", r.fit_l2.lambda, 0.0, r.fit_ok && r.fit_l2.lambda > 0);

    RunConfig z = c;
    z.initial_kind = "zero";
    z.t_end = 1;
    const RunResult rz = run_dvm(z, ro);
    double mx = 0;
    for (double x : rz.final_field.data) mx = std::max(mx, std::abs(x));
    add(out, "dvm.zero_fixed_point", mx, 0.0, mx == 0.0);

    // Collisionless walk against the closed form with specular walls.
    McProblem pb;
    pb.domain = Domain::rect(1, 2);
    pb.wall.alpha_specular = 0;
    pb.wall.alpha_diffuse = 0;
    pb.f0 = [](const Vec3& x, const Vec3& v) { return std::cos(0.7 * x.x) * (1 + 0.3 * x.y) * std::exp(-0.3 * norm2(v)); };
    pb.model = VelocityModel::grid_model(*op, 0.125);
    EstimatorConfig ec;
    ec.collisions = false;
    ec.source = false;
    double worst = 0;
    Rng rng(o.seed, 16);
    const auto& g = *op->grid;
    for (int k = 0; k < 200; ++k) {
        const Probe p{{2 * rng.uniform() - 1, 2 * rng.uniform(), 0}, g.node(std::size_t(rng.uniform() * double(g.size())))};
        const double t = 3 * rng.uniform();
        const SampleResult s = estimate_sample(pb, t, p, ec, rng);
        const Fold f1 = unfold_axial(p.x.x - t * p.v.x, 1.0);
        // x2 in [0, 2]: shift to a slab of half length 1 centred at 0.
        const Fold f2 = unfold_axial(p.x.y - 1 - t * p.v.y, 1.0);
        const Vec3 x0{f1.x1, f2.x1 + 1, 0};
        const Vec3 v0{f1.sign * p.v.x, f2.sign * p.v.y, p.v.z};
        const double exact = std::exp(-collision_frequency(p.v) * t) * pb.f0(x0, v0);
        worst = std::max(worst, std::abs(s.value - exact));
    }
    add_le(out, "mc.collisionless_exact", worst, 1e-12);
}

} // namespace

std::vector<Check> run_battery(const BatteryOptions& opt)
{
    std::vector<Check> out;
    velocity_checks(out, opt);
    operator_checks(out, opt);
    wall_checks(out, opt);
    cycle_checks(out, opt);
    diagnostics_checks(out);
    solver_checks(out, opt);
    return out;
}

std::string battery_csv(const std::vector<Check>& checks)
{
    std::string s = "check_id,value,bound,status\n";
    char buf[256];
    for (const auto& c : checks) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%s\n", c.id.c_str(), c.value, c.bound, c.pass ? "PASS" : "FAIL");
        s += buf;
    }
    return s;
}

} // namespace kslab
