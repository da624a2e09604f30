#pragma once

#include "kslab/vec3.hpp"

#include <limits>
#include <string>

namespace kslab {

enum class DomainKind { Cylinder3D, Rect2D };

// Specular: the flat caps x1 = +-L. Diffuse: lateral wall (cylinder) or
// x2 in {0, H} (rectangle). Edge points are Specular with the grazing flag.
enum class Region { Specular, Diffuse };

const char* region_name(Region r);

struct BoundaryClass {
    Region region = Region::Specular;
    bool grazing = false;
};

struct BoundaryHit {
    double t_b = std::numeric_limits<double>::infinity();
    Vec3 x_b;
    Vec3 normal;
    Region region = Region::Specular;
    bool grazing = false;
    bool finite() const { return t_b < std::numeric_limits<double>::infinity(); }
};

struct Domain {
    DomainKind kind = DomainKind::Rect2D;
    double L = 1.0;
    double R = 1.0; // radius (cylinder) or height H (rectangle)

    static Domain cylinder(double L, double R);
    static Domain rect(double L, double H);

    double H() const { return R; }
    double tol() const;
    // Area for Rect2D (per unit length in x3), volume for the cylinder.
    double measure() const;

    bool contains(const Vec3& x, double slack = 0.0) const;
    // Distance from x to the boundary surface (unsigned).
    double boundary_distance(const Vec3& x) const;

    BoundaryClass classify_boundary(const Vec3& x) const;
    Vec3 outward_normal(const Vec3& x_on_boundary) const;
    BoundaryHit exit_time(const Vec3& x, const Vec3& v) const;
    // Snap a point that should lie on the given portion of the boundary.
    Vec3 reproject(const Vec3& x, Region region) const;

    std::string describe() const;
};

} // namespace kslab
