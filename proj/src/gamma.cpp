#include "kslab/gamma.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"

#include <algorithm>
#include <cmath>

namespace kslab {

namespace {

constexpr int kChunks = 32;

// Lower cell index and fraction along one axis; false outside the node box.
inline bool locate(double x, double vmax, double h, int n, int& i0, double& t)
{
    const double s = (x + vmax) / h - 0.5;
    if (!(s >= 0.0) || s > n - 1) return false;
    i0 = std::min(int(s), n - 2);
    t = s - i0;
    return true;
}

// Centre of the 3-point correction stencil: nearest node, kept off the box edge.
inline int nudge(int i0, double t, int n) { return std::clamp(i0 + (t >= 0.5), 1, n - 2); }

} // namespace

GammaOperator::GammaOperator(GridPtr grid, const SphereRule& omega)
    : grid_(std::move(grid))
{
    // Pair antipodal directions; their post-collision velocities coincide.
    std::vector<bool> used(omega.w.size(), false);
    for (std::size_t i = 0; i < omega.w.size(); ++i) {
        if (used[i]) continue;
        const Vec3 d{omega.x[i], omega.y[i], omega.z[i]};
        double w = omega.w[i];
        for (std::size_t j = i + 1; j < omega.w.size(); ++j) {
            if (used[j]) continue;
            const Vec3 e{omega.x[j], omega.y[j], omega.z[j]};
            if (norm(d + e) < 1e-12) {
                used[j] = true;
                w += omega.w[j];
                break;
            }
        }
        used[i] = true;
        dirs_.push_back(d);
        dw_.push_back(4 * M_PI * w);
    }
    sqmu_ = grid_->sample([](const Vec3& v) { return sqrt_maxwellian(v); });
    isqmu_.resize(sqmu_.size());
    for (std::size_t i = 0; i < sqmu_.size(); ++i) isqmu_[i] = 1 / sqmu_[i];
}

std::vector<double> GammaOperator::apply(const std::vector<double>& g, const std::vector<double>& f, Exec exec) const
{
    const VelocityGrid& vg = *grid_;
    const std::size_t N = vg.size();
    if (g.size() != N || f.size() != N) throw Error(ErrorCode::GridMismatch, "Gamma operand size");
    const int n = vg.n();
    const double h = vg.h(), vmax = vg.v_max();

    std::vector<double> G(N), F(N);
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < N; ++i) {
        G[i] = sqmu_[i] * g[i];
        F[i] = sqmu_[i] * f[i];
        if (G[i] != 0) live.push_back(i);
    }

    std::vector<std::vector<double>> part(kChunks);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (int c = 0; c < kChunks; ++c) {
        std::vector<double> q(N, 0.0);
        const std::size_t a0 = N * c / kChunks, a1 = N * (c + 1) / kChunks;
        for (std::size_t a = a0; a < a1; ++a) {
            if (F[a] == 0) continue;
            const Vec3 va = vg.node(a);
            double loss = 0;
            for (std::size_t b : live) {
                const Vec3 vb = vg.node(b);
                const Vec3 rel = va - vb;
                const double gb = G[b] * F[a];
                for (std::size_t m = 0; m < dirs_.size(); ++m) {
                    const Vec3& w = dirs_[m];
                    const double d = dot(rel, w);
                    if (d == 0) continue;
                    const Vec3 ap = va - d * w, bp = vb + d * w;
                    int i0, j0, k0, ib, jb, kb;
                    double tx, ty, tz, sx, sy, sz;
                    if (!locate(ap.x, vmax, h, n, i0, tx) || !locate(ap.y, vmax, h, n, j0, ty) ||
                        !locate(ap.z, vmax, h, n, k0, tz))
                        continue;
                    if (!locate(bp.x, vmax, h, n, ib, sx) || !locate(bp.y, vmax, h, n, jb, sy) ||
                        !locate(bp.z, vmax, h, n, kb, sz))
                        continue;
                    const double coef = dw_[m] * std::abs(d) * gb;
                    loss += coef;
                    const double wx[2] = {1 - tx, tx}, wy[2] = {1 - ty, ty}, wz[2] = {1 - tz, tz};
                    for (int p = 0; p < 2; ++p)
                        for (int r = 0; r < 2; ++r) {
                            const std::size_t base = vg.index(i0 + p, j0 + r, k0);
                            const double cw = coef * wx[p] * wy[r];
                            q[base] += cw * wz[0];
                            q[base + 1] += cw * wz[1];
                        }
                    // Trilinear weights overestimate v_x^2 by t(1-t)h^2 per axis; a
                    // [-1/2, 1, -1/2] stencil carries no mass or momentum and removes it.
                    const int ni = nudge(i0, tx, n), nj = nudge(j0, ty, n), nk = nudge(k0, tz, n);
                    const int ci = i0 + (tx >= 0.5), cj = j0 + (ty >= 0.5), ck = k0 + (tz >= 0.5);
                    const double ex = coef * tx * (1 - tx), ey = coef * ty * (1 - ty), ez = coef * tz * (1 - tz);
                    q[vg.index(ni, cj, ck)] += ex;
                    q[vg.index(ni - 1, cj, ck)] -= 0.5 * ex;
                    q[vg.index(ni + 1, cj, ck)] -= 0.5 * ex;
                    q[vg.index(ci, nj, ck)] += ey;
                    q[vg.index(ci, nj - 1, ck)] -= 0.5 * ey;
                    q[vg.index(ci, nj + 1, ck)] -= 0.5 * ey;
                    q[vg.index(ci, cj, nk)] += ez;
                    q[vg.index(ci, cj, nk - 1)] -= 0.5 * ez;
                    q[vg.index(ci, cj, nk + 1)] -= 0.5 * ez;
                }
            }
            q[a] -= loss;
        }
        part[c] = std::move(q);
    }

    std::vector<double> out(N, 0.0);
    for (int c = 0; c < kChunks; ++c)
        for (std::size_t i = 0; i < N; ++i) out[i] += part[c][i];
    const double w = vg.weight();
    for (std::size_t i = 0; i < N; ++i) out[i] *= w * isqmu_[i];
    return out;
}

double gamma_weak_pairing(const VelocityGrid& grid, const std::vector<double>& g, const std::vector<double>& f,
                          const std::function<double(const Vec3&)>& psi, const SphereRule& omega)
{
    const std::size_t N = grid.size();
    if (g.size() != N || f.size() != N) throw Error(ErrorCode::GridMismatch, "Gamma operand size");
    std::vector<double> G(N), F(N), psiv(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double s = sqrt_maxwellian(grid.node(i));
        G[i] = s * g[i];
        F[i] = s * f[i];
        psiv[i] = psi(grid.node(i));
    }
    KahanSum total;
    for (std::size_t a = 0; a < N; ++a) {
        if (F[a] == 0) continue;
        const Vec3 va = grid.node(a);
        double acc = 0;
        for (std::size_t b = 0; b < N; ++b) {
            if (G[b] == 0) continue;
            const Vec3 rel = va - grid.node(b);
            double s = 0;
            for (std::size_t m = 0; m < omega.w.size(); ++m) {
                const Vec3 w{omega.x[m], omega.y[m], omega.z[m]};
                const double d = dot(rel, w);
                s += omega.w[m] * std::abs(d) * (psi(va - d * w) - psiv[a]);
            }
            acc += G[b] * s;
        }
        total.add(4 * M_PI * F[a] * acc);
    }
    const double w = grid.weight();
    return total.value() * w * w;
}

} // namespace kslab
