#include "kslab/geometry.hpp"
#include "kslab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kslab {

const char* region_name(Region r) { return r == Region::Specular ? "Specular" : "Diffuse"; }

Domain Domain::cylinder(double L, double R)
{
    if (!(L > 0) || !(R > 0)) throw Error(ErrorCode::ValidationError, "domain lengths must be positive");
    return Domain{DomainKind::Cylinder3D, L, R};
}

Domain Domain::rect(double L, double H)
{
    if (!(L > 0) || !(H > 0)) throw Error(ErrorCode::ValidationError, "domain lengths must be positive");
    return Domain{DomainKind::Rect2D, L, H};
}

double Domain::tol() const { return 1e-9 * std::max(L, R); }

double Domain::measure() const
{
    if (kind == DomainKind::Rect2D) return 2 * L * R;
    return 2 * L * M_PI * R * R;
}

bool Domain::contains(const Vec3& x, double slack) const
{
    if (std::abs(x.x) > L + slack) return false;
    if (kind == DomainKind::Rect2D) return x.y >= -slack && x.y <= R + slack;
    return std::hypot(x.y, x.z) <= R + slack;
}

double Domain::boundary_distance(const Vec3& x) const
{
    double dcap = std::abs(L - std::abs(x.x));
    double dwall;
    if (kind == DomainKind::Rect2D)
        dwall = std::min(std::abs(x.y), std::abs(R - x.y));
    else
        dwall = std::abs(R - std::hypot(x.y, x.z));
    if (contains(x)) return std::min(dcap, dwall);
    // Outside: distance to the closest face, measured along the violated axes.
    double ex = std::max(0.0, std::abs(x.x) - L);
    double ey;
    if (kind == DomainKind::Rect2D)
        ey = std::max({0.0, -x.y, x.y - R});
    else
        ey = std::max(0.0, std::hypot(x.y, x.z) - R);
    return std::hypot(ex, ey);
}

BoundaryClass Domain::classify_boundary(const Vec3& x) const
{
    const double tg = tol();
    if (!contains(x, tg) || boundary_distance(x) > tg)
        throw Error(ErrorCode::NotOnBoundary, "point is not on the boundary within tolerance");
    bool on_cap = std::abs(std::abs(x.x) - L) <= tg;
    bool on_wall;
    if (kind == DomainKind::Rect2D)
        on_wall = std::abs(x.y) <= tg || std::abs(x.y - R) <= tg;
    else
        on_wall = std::abs(std::hypot(x.y, x.z) - R) <= tg;
    if (on_cap) return {Region::Specular, on_wall};
    return {Region::Diffuse, false};
}

Vec3 Domain::outward_normal(const Vec3& x) const
{
    BoundaryClass c = classify_boundary(x);
    if (c.region == Region::Specular) return {x.x > 0 ? 1.0 : -1.0, 0, 0};
    if (kind == DomainKind::Rect2D) return {0, x.y > 0.5 * R ? 1.0 : -1.0, 0};
    double r = std::hypot(x.y, x.z);
    return {0, x.y / r, x.z / r};
}

Vec3 Domain::reproject(const Vec3& x, Region region) const
{
    Vec3 y = x;
    if (region == Region::Specular) {
        y.x = x.x > 0 ? L : -L;
        return y;
    }
    if (kind == DomainKind::Rect2D) {
        y.y = x.y > 0.5 * R ? R : 0.0;
        return y;
    }
    double r = std::hypot(x.y, x.z);
    if (r > 0) {
        y.y = x.y * R / r;
        y.z = x.z * R / r;
    }
    return y;
}

BoundaryHit Domain::exit_time(const Vec3& x, const Vec3& v) const
{
    const double inf = std::numeric_limits<double>::infinity();
    const double speed = norm(v);
    if (!(speed > 0)) throw Error(ErrorCode::ZeroVelocity, "exit_time needs v != 0");

    // Backward ray x - s v: with v1 > 0 it reaches the cap x1 = -L.
    double s_cap = inf;
    if (v.x > 0)
        s_cap = std::max(0.0, (x.x + L) / v.x);
    else if (v.x < 0)
        s_cap = std::max(0.0, (x.x - L) / v.x);

    double s_wall = inf;
    bool tangent = false;
    if (kind == DomainKind::Rect2D) {
        if (v.y > 0)
            s_wall = std::max(0.0, x.y / v.y);
        else if (v.y < 0)
            s_wall = std::max(0.0, (x.y - R) / v.y);
    } else {
        double a = v.y * v.y + v.z * v.z;
        if (a > 1e-24 * speed * speed) {
            double b = x.y * v.y + x.z * v.z;
            double c = x.y * x.y + x.z * x.z - R * R;
            double disc = std::max(0.0, b * b - a * c);
            double sq = std::sqrt(disc);
            if (b > 0)
                s_wall = (b + sq) / a;
            else {
                double den = sq - b;
                s_wall = den > 0 ? std::max(0.0, -c / den) : 0.0;
            }
            tangent = sq <= 1e-9 * std::sqrt(a) * R;
        }
    }

    BoundaryHit hit;
    if (s_cap == inf && s_wall == inf) return hit;

    const double tg = tol();
    bool edge = std::abs(s_cap - s_wall) * speed <= tg;
    if (s_cap <= s_wall || edge) {
        hit.t_b = std::min(s_cap, s_wall);
        hit.region = Region::Specular;
        hit.x_b = reproject(x - hit.t_b * v, Region::Specular);
        hit.normal = {v.x > 0 ? -1.0 : 1.0, 0, 0};
        hit.grazing = edge;
    } else {
        hit.t_b = s_wall;
        hit.region = Region::Diffuse;
        hit.x_b = reproject(x - hit.t_b * v, Region::Diffuse);
        if (kind == DomainKind::Rect2D)
            hit.normal = {0, v.y > 0 ? -1.0 : 1.0, 0};
        else
            hit.normal = {0, hit.x_b.y / R, hit.x_b.z / R};
        hit.grazing = tangent;
    }
    return hit;
}

std::string Domain::describe() const
{
    std::ostringstream os;
    os << (kind == DomainKind::Rect2D ? "Rect2D" : "Cylinder3D") << "(L=" << L
       << (kind == DomainKind::Rect2D ? ", H=" : ", R=") << R << ")";
    return os.str();
}

} // namespace kslab
