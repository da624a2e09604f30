#include "kslab/diagnostics.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace kslab {

DistributionField DistributionField::make(const Domain& d, int nx1, int nx2, GridPtr grid, bool v3_parity)
{
    if (d.kind != DomainKind::Rect2D) throw Error(ErrorCode::InvalidArgument, "field needs a Rect2D domain");
    if (nx1 < 4 || nx2 < 4) throw Error(ErrorCode::ValidationError, "space grid needs >= 4 cells per axis");
    DistributionField f;
    f.domain = d;
    f.nx1 = nx1;
    f.nx2 = nx2;
    f.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (v3_parity && grid->node(i).z < 0) continue;
        f.nodes.push_back(i);
        f.mult.push_back(v3_parity ? 2.0 : 1.0);
    }
    f.data.assign(f.cells() * f.nv(), 0.0);
    return f;
}

std::vector<double> DistributionField::expand(std::size_t c) const
{
    std::vector<double> out(grid->size(), 0.0);
    const double* p = at(c);
    for (std::size_t k = 0; k < nv(); ++k) {
        out[nodes[k]] = p[k];
        if (mult[k] == 2.0) out[grid->reflect(nodes[k], 2)] = p[k];
    }
    return out;
}

std::vector<double> burnett(const VelocityGrid& g, BurnettKind kind, int i, int j)
{
    if (i < 0 || i > 2 || j < 0 || j > 2) throw Error(ErrorCode::IndexOutOfRange, "Burnett index out of range");
    if (kind == BurnettKind::A)
        return g.sample([i, j](const Vec3& v) {
            return (v[i] * v[j] - (i == j ? norm2(v) / 3 : 0.0)) * sqrt_maxwellian(v);
        });
    return g.sample([i](const Vec3& v) { return v[i] * (norm2(v) - 5) / std::sqrt(10.0) * sqrt_maxwellian(v); });
}

namespace {

struct NodeTables {
    std::vector<std::array<double, 5>> chi; // chi_m at reduced node, times mult h^3
    std::vector<double> chi_raw[5];
};

NodeTables node_tables(const DistributionField& f)
{
    NodeTables t;
    const double w = f.grid->weight();
    t.chi.resize(f.nv());
    for (int m = 0; m < 5; ++m) t.chi_raw[m].resize(f.nv());
    bool parity = false;
    for (std::size_t k = 0; k < f.nv(); ++k) {
        const Vec3 v = f.grid->node(f.nodes[k]);
        parity = parity || f.mult[k] != 1;
        for (int m = 0; m < 5; ++m) t.chi_raw[m][k] = chi(m, v);
    }
    // Orthonormalise on the truncated grid so that P is an exact projection.
    // Fields even in v3 carry no v3 momentum, and chi_3 has no stored image.
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        KahanSum d;
        for (std::size_t k = 0; k < f.nv(); ++k) d.add(f.mult[k] * w * a[k] * b[k]);
        return d.value();
    };
    for (int m = 0; m < 5; ++m) {
        auto& u = t.chi_raw[m];
        if (parity && m == 3) {
            std::fill(u.begin(), u.end(), 0.0);
            continue;
        }
        for (int pass = 0; pass < 2; ++pass)
            for (int q = 0; q < m; ++q) {
                const double c = dot(u, t.chi_raw[q]);
                for (std::size_t k = 0; k < f.nv(); ++k) u[k] -= c * t.chi_raw[q][k];
            }
        const double nrm = std::sqrt(dot(u, u));
        for (double& x : u) x /= nrm;
    }
    for (std::size_t k = 0; k < f.nv(); ++k)
        for (int m = 0; m < 5; ++m) t.chi[k][m] = t.chi_raw[m][k] * f.mult[k] * w;
    return t;
}

} // namespace

MomentField moments(const DistributionField& f)
{
    const NodeTables t = node_tables(f);
    MomentField m;
    const std::size_t C = f.cells();
    m.a.assign(C, 0);
    m.c.assign(C, 0);
    m.b.assign(C, {0, 0, 0});
    for (std::size_t c = 0; c < C; ++c) {
        const double* p = f.at(c);
        double s[5] = {0, 0, 0, 0, 0};
        for (std::size_t k = 0; k < f.nv(); ++k)
            for (int q = 0; q < 5; ++q) s[q] += t.chi[k][q] * p[k];
        m.a[c] = s[0];
        m.b[c] = {s[1], s[2], s[3]};
        m.c[c] = s[4];
    }
    return m;
}

double boundary_norm(const DistributionField& f, bool remove_projection)
{
    const VelocityGrid& g = *f.grid;
    KahanSum total;
    for (int side = 0; side < 2; ++side) {
        DiscreteWall wall(f.grid, 1, side == 0 ? -1 : 1);
        const int i2 = side == 0 ? 0 : f.nx2 - 1;
        for (int i1 = 0; i1 < f.nx1; ++i1) {
            const std::vector<double> full = f.expand(f.cell(i1, i2));
            std::vector<double> val = full;
            if (remove_projection) {
                const std::vector<double> P = wall.project(full);
                for (std::size_t i : wall.outgoing()) val[i] -= P[i];
            }
            double s = 0;
            for (std::size_t i : wall.outgoing()) s += val[i] * val[i] * wall.sign() * g.node(i).y;
            total.add(s * g.weight() * f.dx1());
        }
    }
    return std::sqrt(std::max(0.0, total.value()));
}

Norms weighted_norms(const DistributionField& f, double theta)
{
    const NodeTables t = node_tables(f);
    const VelocityGrid& g = *f.grid;
    const double w = g.weight(), dA = f.cell_area();
    std::vector<double> wt(f.nv()), nu(f.nv()), sq(f.nv());
    for (std::size_t k = 0; k < f.nv(); ++k) {
        const Vec3 v = g.node(f.nodes[k]);
        wt[k] = std::exp(theta * norm2(v));
        nu[k] = collision_frequency(v);
        sq[k] = sqrt_maxwellian(v);
    }
    KahanSum l2, na, nb, nc, nip, mass;
    double linf = 0;
    for (std::size_t c = 0; c < f.cells(); ++c) {
        const double* p = f.at(c);
        double s[5] = {0, 0, 0, 0, 0};
        double ff = 0, ms = 0;
        for (std::size_t k = 0; k < f.nv(); ++k) {
            for (int q = 0; q < 5; ++q) s[q] += t.chi[k][q] * p[k];
            ff += f.mult[k] * p[k] * p[k];
            ms += f.mult[k] * sq[k] * p[k];
            linf = std::max(linf, wt[k] * std::abs(p[k]));
        }
        double ip = 0;
        for (std::size_t k = 0; k < f.nv(); ++k) {
            double r = p[k];
            for (int q = 0; q < 5; ++q) r -= s[q] * t.chi_raw[q][k];
            ip += f.mult[k] * nu[k] * nu[k] * r * r;
        }
        l2.add(ff * w * dA);
        mass.add(ms * w * dA);
        na.add(s[0] * s[0] * dA);
        nb.add((s[1] * s[1] + s[2] * s[2] + s[3] * s[3]) * dA);
        nc.add(s[4] * s[4] * dA);
        nip.add(ip * w * dA);
    }
    Norms n;
    n.l2 = std::sqrt(l2.value());
    n.linf_w = linf;
    n.norm_a = std::sqrt(na.value());
    n.norm_b = std::sqrt(nb.value());
    n.norm_c = std::sqrt(nc.value());
    n.norm_IP_nu = std::sqrt(std::max(0.0, nip.value()));
    n.mass = mass.value();
    n.bdry_2plus = boundary_norm(f, true);
    return n;
}

DecayReport fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi,
                      const std::string& name)
{
    if (t.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "series lengths differ");
    std::vector<double> xs, ls;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        if (!(y[i] > 0)) throw Error(ErrorCode::NonPositiveNorm, "norm " + name + " not positive at t=" + std::to_string(t[i]));
        xs.push_back(t[i]);
        ls.push_back(std::log(y[i]));
    }
    if (xs.size() < 10) throw Error(ErrorCode::WindowTooSmall, "fit window holds " + std::to_string(xs.size()) + " points");
    const double n = double(xs.size());
    KahanSum sx, sl;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx.add(xs[i]);
        sl.add(ls[i]);
    }
    const double mx = sx.value() / n, ml = sl.value() / n;
    KahanSum sxx, sxl, sll;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dl = ls[i] - ml;
        sxx.add(dx * dx);
        sxl.add(dx * dl);
        sll.add(dl * dl);
    }
    DecayReport r;
    const double slope = sxl.value() / sxx.value();
    r.lambda = -slope;
    r.prefactor = std::exp(ml - slope * mx);
    const double ss_tot = sll.value();
    KahanSum ss_res;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ls[i] - (ml + slope * (xs[i] - mx));
        ss_res.add(e * e);
    }
    r.r_squared = ss_tot > 0 ? std::clamp(1 - ss_res.value() / ss_tot, 0.0, 1.0) : 1.0;
    r.t_lo = t_lo;
    r.t_hi = t_hi;
    r.points = xs.size();
    r.norm_name = name;
    const double span = xs.back() - xs.front();
    r.no_decay = !(r.lambda * span > 1e-6);
    return r;
}

double pair_with(const DistributionField& f, const TestFunction& psi)
{
    const double w = f.grid->weight(), dA = f.cell_area();
    std::vector<double> cj(f.nv());
    for (std::size_t k = 0; k < f.nv(); ++k) cj[k] = chi(psi.j, f.grid->node(f.nodes[k])) * f.mult[k] * w;
    KahanSum s;
    for (std::size_t c = 0; c < f.cells(); ++c) {
        const double* p = f.at(c);
        double acc = 0;
        for (std::size_t k = 0; k < f.nv(); ++k) acc += cj[k] * p[k];
        s.add(psi.phi(f.center(c)) * acc * dA);
    }
    return s.value();
}

namespace {

// d/dt int psi f from the right-hand side evaluated on one snapshot.
double balance_rate(const WeakFormInputs& in, const Snapshot& snap, const TestFunction& psi)
{
    const DistributionField& f = snap.f;
    const VelocityGrid& g = *f.grid;
    const double w = g.weight(), dA = f.cell_area();
    const std::size_t N = g.size();
    std::vector<double> cj = chi_on_grid(g, psi.j);

    // Transport: int v.grad(phi) chi_j f
    KahanSum tr, lf, src;
    for (std::size_t c = 0; c < f.cells(); ++c) {
        const Vec3 x = f.center(c);
        const Vec3 gp = psi.grad_phi(x);
        const double phi = psi.phi(x);
        const double* p = f.at(c);
        double a = 0, l = 0, s = 0;
        for (std::size_t k = 0; k < f.nv(); ++k) {
            const std::size_t i = f.nodes[k];
            const Vec3 v = g.node(i);
            a += f.mult[k] * (gp.x * v.x + gp.y * v.y) * cj[i] * p[k];
            if (!in.L_chi.empty()) l += f.mult[k] * in.L_chi[i] * p[k];
            if (in.g) s += f.mult[k] * in.g(snap.t, x, v) * cj[i];
        }
        tr.add(a * w * dA);
        lf.add(phi * l * w * dA);
        src.add(phi * s * w * dA);
    }

    // Boundary: int psi f (n.v) over all four sides, incoming side from the wall closure.
    KahanSum bd;
    for (int axis = 0; axis < 2; ++axis)
        for (int sign : {-1, 1}) {
            DiscreteWall wall(f.grid, axis, sign);
            const Region region = axis == 0 ? Region::Specular : Region::Diffuse;
            const double alpha = in.wall.alpha(region);
            const int count = axis == 0 ? f.nx2 : f.nx1;
            const double len = axis == 0 ? f.dx2() : f.dx1();
            for (int q = 0; q < count; ++q) {
                std::size_t c;
                Vec3 xf;
                if (axis == 0) {
                    c = f.cell(sign < 0 ? 0 : f.nx1 - 1, q);
                    xf = {sign < 0 ? -f.domain.L : f.domain.L, f.center(c).y, 0};
                } else {
                    c = f.cell(q, sign < 0 ? 0 : f.nx2 - 1);
                    xf = {f.center(c).x, sign < 0 ? 0.0 : f.domain.H(), 0};
                }
                const std::vector<double> full = wall.apply(f.expand(c), alpha);
                double s = 0;
                for (std::size_t i = 0; i < N; ++i) s += cj[i] * full[i] * sign * g.node(i)[axis];
                bd.add(psi.phi(xf) * s * w * len);
            }
        }
    return tr.value() - bd.value() - lf.value() + src.value();
}

} // namespace

std::vector<double> weak_form_residual(const WeakFormInputs& in, const TestFunction& psi)
{
    if (!in.snapshots || in.snapshots->size() < 2) throw Error(ErrorCode::MissingSnapshots, "need >= 2 snapshots");
    const auto& snaps = *in.snapshots;
    std::vector<double> rate(snaps.size()), pairing(snaps.size());
    for (std::size_t s = 0; s < snaps.size(); ++s) {
        rate[s] = balance_rate(in, snaps[s], psi);
        pairing[s] = pair_with(snaps[s].f, psi);
    }
    std::vector<double> res;
    for (std::size_t s = 1; s < snaps.size(); ++s) {
        const double dt = snaps[s].t - snaps[s - 1].t;
        res.push_back(pairing[s] - pairing[s - 1] - 0.5 * dt * (rate[s] + rate[s - 1]));
    }
    return res;
}

} // namespace kslab
