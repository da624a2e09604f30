#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace kslab {

double maxwellian(const Vec3& v) { return std::pow(kTwoPi, -1.5) * std::exp(-0.5 * norm2(v)); }

double sqrt_maxwellian(const Vec3& v) { return std::pow(kTwoPi, -0.75) * std::exp(-0.25 * norm2(v)); }

double collision_frequency(double r)
{
    // 2 pi E|v - U| for a standard normal U.
    const double s2pi = std::sqrt(2.0 / M_PI);
    if (r < 1e-6) return kTwoPi * (2 * s2pi + s2pi * r * r / 3);
    double e = (r + 1.0 / r) * std::erf(r / M_SQRT2) + s2pi * std::exp(-0.5 * r * r);
    return kTwoPi * e;
}

double grad_kernel(const Vec3& v, const Vec3& u)
{
    double r2 = norm2(v - u);
    if (r2 < 1e-24) throw Error(ErrorCode::CoincidentVelocities, "grad_kernel at v == u");
    double r = std::sqrt(r2);
    double vv = norm2(v), uu = norm2(u);
    double d = vv - uu;
    double k1 = kGradC1 * r * std::exp(-0.25 * (vv + uu));
    double k2 = kGradC2 / r * std::exp(-r2 / 8 - d * d / (8 * r2));
    return k2 - k1;
}

double grad_kernel_polar(double speed, double r, double c)
{
    // |v|^2 - |u|^2 = -(2 r |v| c + r^2), so the k2 exponent collapses to
    // -r^2/8 - (2|v|c + r)^2/8.
    double a = 2 * speed * c + r;
    double uu = speed * speed + 2 * r * speed * c + r * r;
    double k2 = kGradC2 / r * std::exp(-(r * r + a * a) / 8);
    double k1 = kGradC1 * r * std::exp(-0.25 * (speed * speed + uu));
    return k2 - k1;
}

namespace {

bool filter_contains(KthetaFilter f, double N, double r, double uu)
{
    switch (f) {
    case KthetaFilter::All: return true;
    case KthetaFilter::FarSpeed: return uu > N * N;
    case KthetaFilter::NearSingular: return r <= 1.0 / N;
    case KthetaFilter::FarOrNear: return uu > N * N || r <= 1.0 / N;
    }
    return true;
}

} // namespace

double ktheta_integral(const Vec3& v, double theta, KthetaFilter filter, double N)
{
    if (!(theta >= 0 && theta < 0.25)) throw Error(ErrorCode::ThetaOutOfRange, "theta must lie in [0, 1/4)");
    if (filter != KthetaFilter::All && !(N > 0)) throw Error(ErrorCode::InvalidArgument, "filter needs N > 0");
    const double s = norm(v);
    const double rmax = s + 16.0;
    const auto& gl = gauss_legendre(8);

    // Split the r axis at 1/N so the near-singular indicator is exact.
    std::vector<double> rbreaks{0.0};
    if (filter == KthetaFilter::NearSingular || filter == KthetaFilter::FarOrNear) rbreaks.push_back(1.0 / N);
    for (double r = 0.25; r < rmax; r += 0.25)
        if (r > rbreaks.back() + 1e-12) rbreaks.push_back(r);
    rbreaks.push_back(rmax);

    const double cw = 0.25 / std::max(s, 1.0);
    const int nc = int(std::ceil(2.0 / cw));
    double total = 0;
    for (std::size_t p = 0; p + 1 < rbreaks.size(); ++p) {
        double r0 = rbreaks[p], r1 = rbreaks[p + 1];
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * gl.x[q];
            double wr = 0.5 * (r1 - r0) * gl.w[q];
            // c-range where |u| > N: c > cstar. Insert cstar as a panel break.
            double cstar = 2.0;
            if ((filter == KthetaFilter::FarSpeed || filter == KthetaFilter::FarOrNear) && s > 0)
                cstar = (N * N - s * s - r * r) / (2 * r * s);
            double inner = 0;
            for (int k = 0; k < nc; ++k) {
                double c0 = -1 + k * (2.0 / nc), c1 = c0 + 2.0 / nc;
                double segs[3] = {c0, c1, c1};
                int nseg = 1;
                if (cstar > c0 && cstar < c1) {
                    segs[1] = cstar;
                    segs[2] = c1;
                    nseg = 2;
                }
                for (int sg = 0; sg < nseg; ++sg) {
                    double a0 = segs[sg], a1 = segs[sg + 1];
                    double cm = 0.5 * (a0 + a1);
                    double uu_mid = s * s + 2 * r * s * cm + r * r;
                    if (!filter_contains(filter, N, r, uu_mid)) continue;
                    for (std::size_t m = 0; m < gl.x.size(); ++m) {
                        double c = cm + 0.5 * (a1 - a0) * gl.x[m];
                        double uu = s * s + 2 * r * s * c + r * r;
                        double k = std::abs(grad_kernel_polar(s, r, c));
                        inner += 0.5 * (a1 - a0) * gl.w[m] * k * std::exp(theta * (s * s - uu));
                    }
                }
            }
            total += wr * r * r * inner;
        }
    }
    return kTwoPi * total;
}

double ktheta_sup_away(const Vec3& v, double theta, double N)
{
    if (!(theta >= 0 && theta < 0.25)) throw Error(ErrorCode::ThetaOutOfRange, "theta must lie in [0, 1/4)");
    const double s = norm(v);
    double best = 0;
    const double r0 = 1.0 / N;
    for (int i = 0; i <= 400; ++i) {
        double r = r0 + (s + 12.0) * i / 400.0;
        for (int j = 0; j <= 800; ++j) {
            double c = -1 + 2.0 * j / 800.0;
            double uu = s * s + 2 * r * s * c + r * r;
            double k = std::abs(grad_kernel_polar(s, r, c)) * std::exp(theta * (s * s - uu));
            best = std::max(best, k);
        }
    }
    return best;
}

double chi(int m, const Vec3& v)
{
    double sm = sqrt_maxwellian(v);
    switch (m) {
    case 0: return sm;
    case 1: return v.x * sm;
    case 2: return v.y * sm;
    case 3: return v.z * sm;
    case 4: return (norm2(v) - 3.0) / std::sqrt(6.0) * sm;
    }
    throw Error(ErrorCode::IndexOutOfRange, "chi index must be 0..4");
}

std::vector<double> chi_on_grid(const VelocityGrid& g, int m)
{
    return g.sample([m](const Vec3& v) { return chi(m, v); });
}

Projection project_P(const VelocityGrid& g, const std::vector<double>& f)
{
    if (f.size() != g.size()) throw Error(ErrorCode::GridMismatch, "f does not match velocity grid");
    Projection p;
    std::array<std::vector<double>, 5> basis;
    std::array<double, 5> coef;
    for (int m = 0; m < 5; ++m) {
        basis[m] = chi_on_grid(g, m);
        coef[m] = g.inner(f, basis[m]);
    }
    p.a = coef[0];
    p.b = {coef[1], coef[2], coef[3]};
    p.c = coef[4];
    p.Pf.assign(g.size(), 0.0);
    for (int m = 0; m < 5; ++m)
        for (std::size_t i = 0; i < g.size(); ++i) p.Pf[i] += coef[m] * basis[m][i];
    return p;
}

} // namespace kslab
