#include "kslab/kernel_table.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kslab {

namespace {

struct Lagrange1D {
    int P;
    std::vector<double> denom;
    explicit Lagrange1D(int points) : P(points), denom(points)
    {
        for (int p = 0; p < P; ++p) {
            double d = 1;
            for (int q = 0; q < P; ++q)
                if (q != p) d *= double(p - q);
            denom[p] = d;
        }
    }
    // Weights at t measured from the first stencil node.
    void weights(double t, double* w) const
    {
        for (int p = 0; p < P; ++p) {
            double num = 1;
            for (int q = 0; q < P; ++q)
                if (q != p) num *= (t - q);
            w[p] = num / denom[p];
        }
    }
};

void orthonormal_frame(const Vec3& v, Vec3& e1, Vec3& e2, Vec3& e3)
{
    double s = norm(v);
    if (s < 1e-14) {
        e1 = {1, 0, 0};
        e2 = {0, 1, 0};
        e3 = {0, 0, 1};
        return;
    }
    e3 = (1.0 / s) * v;
    Vec3 t = std::abs(e3.x) < 0.6 ? Vec3{1, 0, 0} : (std::abs(e3.y) < 0.6 ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    e1 = t - dot(t, e3) * e3;
    e1 = (1.0 / norm(e1)) * e1;
    e2 = cross(e3, e1);
}

std::vector<const AxisSymmetry*> stabilizer(const VelocityGrid& g, std::size_t rep)
{
    std::vector<const AxisSymmetry*> stab;
    for (const auto& s : octahedral_group())
        if (g.apply(s, rep) == rep) stab.push_back(&s);
    return stab;
}

std::vector<double> symmetrised_row(const VelocityGrid& g, std::size_t rep, const KernelTableOptions& opt)
{
    std::vector<double> row = kernel_row(g, g.node(rep), opt);
    const auto stab = stabilizer(g, rep);
    if (stab.size() == 1) return row;
    std::vector<double> out(row.size(), 0.0);
    const double inv = 1.0 / double(stab.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        double acc = 0;
        for (const auto* s : stab) acc += row[g.apply(*s, j)];
        out[j] = acc * inv;
    }
    return out;
}

// Visit the quadrature points of one row: fn(u, w) with w including
// k(v,u) sqrt(mu(u)) and the volume element.
template <class Fn>
void for_each_row_point(const VelocityGrid& g, const Vec3& v, const KernelTableOptions& opt, Fn&& fn)
{
    const double h = g.h();
    Vec3 e1, e2, e3;
    orthonormal_frame(v, e1, e2, e3);
    const double speed = norm(v);
    const double umax = g.v_max() + opt.tail;
    const double rmax = speed + umax;

    const auto& gl = gauss_legendre(opt.gauss_points);
    const double rp = opt.r_panel * h;
    const int nr = int(std::ceil(rmax / rp));
    const double cw = opt.c_width * h / std::max(speed, 1.0);
    const int nc = std::max(2, int(std::ceil(2.0 / cw)));
    const double dc = 2.0 / nc;

    for (int ir = 0; ir < nr; ++ir) {
        for (std::size_t qr = 0; qr < gl.x.size(); ++qr) {
            const double r = (ir + 0.5 + 0.5 * gl.x[qr]) * rp;
            const double wr = 0.5 * rp * gl.w[qr] * r * r;
            for (int ic = 0; ic < nc; ++ic) {
                for (std::size_t qc = 0; qc < gl.x.size(); ++qc) {
                    const double c = -1 + (ic + 0.5 + 0.5 * gl.x[qc]) * dc;
                    const double uu = speed * speed + 2 * r * speed * c + r * r;
                    if (uu > umax * umax) continue;
                    const double sn = std::sqrt(std::max(0.0, 1 - c * c));
                    const double kval = grad_kernel_polar(speed, r, c) * std::pow(kTwoPi, -0.75) * std::exp(-0.25 * uu);
                    const int nphi = std::max(8, int(std::ceil(opt.phi_factor * kTwoPi * r * sn / h)));
                    const double base_w = wr * 0.5 * dc * gl.w[qc] * kval * kTwoPi / nphi;
                    const Vec3 axial = v + (r * c) * e3;
                    for (int ip = 0; ip < nphi; ++ip) {
                        const double phi = kTwoPi * ip / nphi;
                        fn(axial + (r * sn * std::cos(phi)) * e1 + (r * sn * std::sin(phi)) * e2, base_w);
                    }
                }
            }
        }
    }
}

} // namespace

std::vector<double> kernel_row(const VelocityGrid& g, const Vec3& v, const KernelTableOptions& opt)
{
    const int n = g.n();
    const int P = std::min(opt.lagrange_points, n);
    const int half = P / 2;
    const double h = g.h(), vmax = g.v_max();
    const Lagrange1D lag(P);
    std::vector<double> row(g.size(), 0.0);
    std::vector<double> wx(P), wy(P), wz(P);

    // f is represented as sqrt(mu) times the Lagrange interpolant of
    // f / sqrt(mu); outside the box the nearest in-range stencil is used.
    for_each_row_point(g, v, opt, [&](const Vec3& u, double w) {
        int b[3];
        const double uc[3] = {u.x, u.y, u.z};
        double* ws[3] = {wx.data(), wy.data(), wz.data()};
        for (int a = 0; a < 3; ++a) {
            const double s = (uc[a] + vmax) / h - 0.5;
            b[a] = std::clamp(int(std::floor(s)) - (half - 1), 0, n - P);
            lag.weights(s - b[a], ws[a]);
        }
        for (int pa = 0; pa < P; ++pa) {
            const double wa = w * wx[pa];
            for (int pb = 0; pb < P; ++pb) {
                const double wab = wa * wy[pb];
                double* dst = row.data() + (std::size_t(b[0] + pa) * n + b[1] + pb) * n + b[2];
                for (int pc = 0; pc < P; ++pc) dst[pc] += wab * wz[pc];
            }
        }
    });
    for (std::size_t j = 0; j < row.size(); ++j) row[j] /= sqrt_maxwellian(g.node(j));
    return row;
}

OrbitSet node_orbits(const VelocityGrid& g)
{
    OrbitSet o;
    const int n = g.n();
    for (int i = n / 2; i < n; ++i)
        for (int j = n / 2; j <= i; ++j)
            for (int k = n / 2; k <= j; ++k) {
                std::size_t rep = g.index(i, j, k);
                std::vector<std::size_t> imgs;
                for (const auto& s : octahedral_group()) imgs.push_back(g.apply(s, rep));
                std::sort(imgs.begin(), imgs.end());
                imgs.erase(std::unique(imgs.begin(), imgs.end()), imgs.end());
                o.reps.push_back(rep);
                o.orbit_size.push_back(int(imgs.size()));
            }
    return o;
}

KernelTable KernelTable::build(GridPtr grid, const KernelTableOptions& opt, Exec exec)
{
    if (!(opt.theta >= 0 && opt.theta < 0.25)) throw Error(ErrorCode::ThetaOutOfRange, "theta must lie in [0, 1/4)");
    KernelTable t;
    t.grid_ = grid;
    t.opt_ = opt;
    const VelocityGrid& g = *grid;
    const std::size_t N = g.size();
    t.K_.assign(N * N, 0.0);
    t.nu_.resize(N);
    for (std::size_t i = 0; i < N; ++i) t.nu_[i] = collision_frequency(g.node(i));

    const OrbitSet orb = node_orbits(g);
    const long nrep = long(orb.reps.size());
    const auto& group = octahedral_group();
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long q = 0; q < nrep; ++q) {
        const std::size_t rep = orb.reps[q];
        const std::vector<double> row = symmetrised_row(g, rep, opt);
        for (const auto& s : group) {
            const std::size_t gi = g.apply(s, rep);
            double* dst = t.K_.data() + gi * N;
            for (std::size_t j = 0; j < N; ++j) dst[g.apply(s, j)] = row[j];
        }
    }
    return t;
}

std::vector<double> apply_L(const KernelTable& t, const std::vector<double>& f)
{
    const std::size_t N = t.size();
    if (f.size() != N) throw Error(ErrorCode::GridMismatch, "f does not match kernel table grid");
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double* row = t.K().data() + i * N;
        double acc = 0;
        for (std::size_t j = 0; j < N; ++j) acc += row[j] * f[j];
        out[i] = t.nu()[i] * f[i] - acc;
    }
    return out;
}

CorrectedOperator correct_operator(const KernelTable& t)
{
    CorrectedOperator op;
    op.grid = t.grid_ptr();
    const VelocityGrid& g = t.grid();
    const std::size_t N = t.size();
    op.nu = t.nu();
    op.L.resize(N * N);
    double asym = 0, total = 0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            const double kij = t.K(i, j), kji = t.K(j, i);
            op.L[i * N + j] = (i == j ? op.nu[i] : 0.0) - 0.5 * (kij + kji);
            asym += (kij - kji) * (kij - kji);
            total += kij * kij;
        }
    op.asymmetry = std::sqrt(asym / total);

    double worst = 0;
    for (int m = 0; m < 5; ++m) {
        const std::vector<double> c = chi_on_grid(g, m);
        worst = std::max(worst, g.l2(apply_L(t, c)) / g.l2(c));
    }
    op.correction = worst;

    // Orthonormal basis of the discrete null space (modified Gram-Schmidt).
    std::vector<std::vector<double>> C;
    for (int m = 0; m < 5; ++m) {
        std::vector<double> c = chi_on_grid(g, m);
        for (const auto& q : C) {
            const double d = std::inner_product(c.begin(), c.end(), q.begin(), 0.0);
            for (std::size_t i = 0; i < N; ++i) c[i] -= d * q[i];
        }
        const double nc = std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
        for (double& x : c) x /= nc;
        C.push_back(std::move(c));
    }
    // L <- Q L Q with Q = I - C C^T.
    std::vector<std::vector<double>> LC(5, std::vector<double>(N, 0.0));
    for (int m = 0; m < 5; ++m)
        for (std::size_t i = 0; i < N; ++i) {
            const double* row = op.L.data() + i * N;
            double acc = 0;
            for (std::size_t j = 0; j < N; ++j) acc += row[j] * C[m][j];
            LC[m][i] = acc;
        }
    double CLC[5][5];
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) CLC[a][b] = std::inner_product(C[a].begin(), C[a].end(), LC[b].begin(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        double ci[5], lci[5];
        for (int m = 0; m < 5; ++m) {
            ci[m] = C[m][i];
            lci[m] = LC[m][i];
        }
        double* row = op.L.data() + i * N;
        for (std::size_t j = 0; j < N; ++j) {
            double d = 0;
            for (int a = 0; a < 5; ++a) {
                d -= lci[a] * C[a][j] + ci[a] * LC[a][j];
                double inner = 0;
                for (int b = 0; b < 5; ++b) inner += CLC[a][b] * C[b][j];
                d += ci[a] * inner;
            }
            row[j] += d;
        }
    }
    return op;
}

std::vector<double> apply_L(const CorrectedOperator& op, const std::vector<double>& f)
{
    const std::size_t N = op.size();
    if (f.size() != N) throw Error(ErrorCode::GridMismatch, "f does not match operator grid");
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double* row = op.L.data() + i * N;
        double acc = 0;
        for (std::size_t j = 0; j < N; ++j) acc += row[j] * f[j];
        out[i] = acc;
    }
    return out;
}

std::vector<double> null_space_residuals(const VelocityGrid& g, const KernelTableOptions& opt, Exec exec)
{
    // The weighted Lagrange basis reproduces sqrt(mu) x quadratics exactly,
    // so sum_j K_ij chi_m(v_j) equals the row quadrature of k chi_m itself.
    if (opt.lagrange_points < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 Lagrange points");
    const OrbitSet orb = node_orbits(g);
    std::vector<std::vector<double>> chis(5);
    for (int m = 0; m < 5; ++m) chis[m] = chi_on_grid(g, m);
    const long nrep = long(orb.reps.size());
    std::vector<std::array<double, 5>> res(nrep);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long q = 0; q < nrep; ++q) {
        const std::size_t rep = orb.reps[q];
        const Vec3 v = g.node(rep);
        std::array<double, 5> acc{0, 0, 0, 0, 0};
        // Weights already carry sqrt(mu(u)); chi_m / sqrt(mu) is the polynomial part.
        for_each_row_point(g, v, opt, [&](const Vec3& u, double w) {
            acc[0] += w;
            acc[1] += w * u.x;
            acc[2] += w * u.y;
            acc[3] += w * u.z;
            acc[4] += w * (norm2(u) - 3.0) / std::sqrt(6.0);
        });
        const double nu = collision_frequency(v);
        for (int m = 0; m < 5; ++m) res[q][m] = nu * chis[m][rep] - acc[m];
    }
    double s0 = 0, s4 = 0, s1 = 0;
    double n0 = 0, n4 = 0, n1 = 0;
    for (long q = 0; q < nrep; ++q) {
        const double w = orb.orbit_size[q];
        const std::size_t rep = orb.reps[q];
        s0 += w * res[q][0] * res[q][0];
        s4 += w * res[q][4] * res[q][4];
        n0 += w * chis[0][rep] * chis[0][rep];
        n4 += w * chis[4][rep] * chis[4][rep];
        for (int m = 1; m <= 3; ++m) {
            s1 += w * res[q][m] * res[q][m];
            n1 += w * chis[m][rep] * chis[m][rep];
        }
    }
    const double r0 = std::sqrt(s0 / n0), r1 = std::sqrt(s1 / n1), r4 = std::sqrt(s4 / n4);
    return {r0, r1, r1, r1, r4};
}

} // namespace kslab
