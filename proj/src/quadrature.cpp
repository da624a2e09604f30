#include "kslab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace kslab {

namespace {

GaussRule make_gauss(int n)
{
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        g.x[n - 1 - i] = x;
        g.w[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
    }
    return g;
}

} // namespace

const GaussRule& gauss_legendre(int n)
{
    static std::map<int, GaussRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss(n)).first;
    return it->second;
}

const SphereRule& lebedev26()
{
    static const SphereRule rule = [] {
        SphereRule s;
        auto add = [&](double x, double y, double z, double w) {
            s.x.push_back(x);
            s.y.push_back(y);
            s.z.push_back(z);
            s.w.push_back(w);
        };
        const double a1 = 1.0 / 21, a2 = 4.0 / 105, a3 = 9.0 / 280;
        for (int ax = 0; ax < 3; ++ax)
            for (int sg : {1, -1}) {
                double p[3] = {0, 0, 0};
                p[ax] = sg;
                add(p[0], p[1], p[2], a1);
            }
        const double q = 1 / std::sqrt(2.0);
        for (int ax = 0; ax < 3; ++ax)
            for (int s1 : {1, -1})
                for (int s2 : {1, -1}) {
                    double p[3] = {0, 0, 0};
                    p[(ax + 1) % 3] = s1 * q;
                    p[(ax + 2) % 3] = s2 * q;
                    add(p[0], p[1], p[2], a2);
                }
        const double t = 1 / std::sqrt(3.0);
        for (int s1 : {1, -1})
            for (int s2 : {1, -1})
                for (int s3 : {1, -1}) add(s1 * t, s2 * t, s3 * t, a3);
        return s;
    }();
    return rule;
}

SphereRule sphere_product_rule(int n_polar, int n_azimuth)
{
    SphereRule s;
    const GaussRule& gl = gauss_legendre(n_polar);
    for (int i = 0; i < n_polar; ++i) {
        const double c = gl.x[i], sn = std::sqrt(1 - c * c);
        for (int j = 0; j < n_azimuth; ++j) {
            const double phi = 2 * M_PI * (j + 0.5) / n_azimuth;
            s.x.push_back(sn * std::cos(phi));
            s.y.push_back(sn * std::sin(phi));
            s.z.push_back(c);
            s.w.push_back(gl.w[i] / (2.0 * n_azimuth));
        }
    }
    return s;
}

} // namespace kslab
