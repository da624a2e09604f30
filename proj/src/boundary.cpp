#include "kslab/boundary.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/parallel.hpp"

#include <cmath>

namespace kslab {

Vec3 sample_diffuse(const Vec3& n, Rng& rng)
{
    // Orthonormal frame (n, t1, t2).
    const Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 t1 = cross(n, a);
    t1 = (1.0 / norm(t1)) * t1;
    const Vec3 t2 = cross(n, t1);
    const double s = std::sqrt(-2.0 * std::log(rng.uniform()));
    const double g1 = rng.normal(), g2 = rng.normal();
    return s * n + g1 * t1 + g2 * t2;
}

void WallModel::validate() const
{
    for (double a : {alpha_specular, alpha_diffuse})
        if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::ValidationError, "alpha must lie in [0,1]");
}

DiscreteWall::DiscreteWall(GridPtr grid, int axis, int sign)
    : grid_(std::move(grid)), axis_(axis), sign_(sign)
{
    if (axis < 0 || axis > 2 || (sign != 1 && sign != -1))
        throw Error(ErrorCode::InvalidArgument, "wall normal must be +-e_axis");
    const VelocityGrid& g = *grid_;
    // Cell-centred nodes: no node has n.v = 0, and v -> R v maps nodes onto nodes.
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.reflect(g.reflect(i, axis), axis) != i) throw Error(ErrorCode::GridAsymmetry, "grid not reflection symmetric");
        const double vn = sign * g.node(i)[axis];
        (vn > 0 ? out_ : in_).push_back(i);
    }
    if (out_.size() != in_.size()) throw Error(ErrorCode::GridAsymmetry, "unequal half spaces");
    sqmu_ = g.sample([](const Vec3& v) { return sqrt_maxwellian(v); });
    KahanSum m;
    for (std::size_t i : in_) m.add(std::sqrt(2 * M_PI) * sqmu_[i] * sqmu_[i] * std::abs(g.node(i)[axis]) * g.weight());
    raw_mass_ = m.value();
    D_ = std::sqrt(2 * M_PI) / raw_mass_;
    prob_.resize(in_.size());
    for (std::size_t k = 0; k < in_.size(); ++k) {
        const std::size_t i = in_[k];
        prob_[k] = D_ * sqmu_[i] * sqmu_[i] * std::abs(g.node(i)[axis]) * g.weight();
    }
}

Vec3 DiscreteWall::normal() const
{
    Vec3 n{0, 0, 0};
    n[axis_] = sign_;
    return n;
}

double DiscreteWall::outgoing_flux(const std::vector<double>& f) const
{
    KahanSum s;
    for (std::size_t i : out_) s.add(f[i] * sqmu_[i] * sign_ * grid_->node(i)[axis_]);
    return s.value() * grid_->weight();
}

double DiscreteWall::net_flux(const std::vector<double>& f) const
{
    KahanSum s;
    for (std::size_t i = 0; i < f.size(); ++i) s.add(f[i] * sqmu_[i] * sign_ * grid_->node(i)[axis_]);
    return s.value() * grid_->weight();
}

void DiscreteWall::close(double* f, double alpha) const
{
    double phi = 0;
    if (alpha > 0) {
        KahanSum s;
        for (std::size_t i : out_) s.add(f[i] * sqmu_[i] * sign_ * grid_->node(i)[axis_]);
        phi = s.value() * grid_->weight();
    }
    for (std::size_t i : in_) {
        const double spec = alpha < 1 ? f[mirror(i)] : 0.0;
        f[i] = alpha * D_ * sqmu_[i] * phi + (1 - alpha) * spec;
    }
}

std::vector<double> DiscreteWall::apply(const std::vector<double>& f, double alpha) const
{
    if (f.size() != grid_->size()) throw Error(ErrorCode::GridMismatch, "wall operand size");
    std::vector<double> out = f;
    close(out.data(), alpha);
    return out;
}

std::vector<double> DiscreteWall::project(const std::vector<double>& f) const
{
    if (f.size() != grid_->size()) throw Error(ErrorCode::GridMismatch, "wall operand size");
    const double phi = outgoing_flux(f);
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i : out_) out[i] = D_ * sqmu_[i] * phi;
    return out;
}

} // namespace kslab
