#include "kslab/velocity_grid.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace kslab {

const std::vector<AxisSymmetry>& octahedral_group()
{
    static const std::vector<AxisSymmetry> group = [] {
        std::vector<AxisSymmetry> g;
        std::array<int, 3> p{0, 1, 2};
        do {
            for (int s = 0; s < 8; ++s) {
                AxisSymmetry e;
                e.perm = p;
                for (int a = 0; a < 3; ++a) e.sign[a] = (s >> a) & 1 ? -1 : 1;
                g.push_back(e);
            }
        } while (std::next_permutation(p.begin(), p.end()));
        return g;
    }();
    return group;
}

VelocityGrid::VelocityGrid(int n_per_axis, double v_max) : n_(n_per_axis), v_max_(v_max)
{
    if (n_ < 2 || n_ % 2 != 0)
        throw Error(ErrorCode::ValidationError, "velocity n_per_axis must be even and >= 2");
    if (!(v_max > 0)) throw Error(ErrorCode::ValidationError, "velocity v_max must be positive");
    h_ = 2 * v_max / n_;
    nodes_.resize(std::size_t(n_) * n_ * n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            for (int k = 0; k < n_; ++k) nodes_[index(i, j, k)] = {coord(i), coord(j), coord(k)};
}

std::size_t VelocityGrid::reflect(std::size_t idx, int axis) const
{
    auto c = ijk(idx);
    c[axis] = n_ - 1 - c[axis];
    return index(c[0], c[1], c[2]);
}

std::size_t VelocityGrid::apply(const AxisSymmetry& g, std::size_t idx) const
{
    auto c = ijk(idx);
    std::array<int, 3> o;
    for (int a = 0; a < 3; ++a) o[a] = g.sign[a] > 0 ? c[g.perm[a]] : n_ - 1 - c[g.perm[a]];
    return index(o[0], o[1], o[2]);
}

std::size_t VelocityGrid::nearest(const Vec3& v) const
{
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) {
        int i = int(std::floor((v[a] + v_max_) / h_));
        c[a] = std::clamp(i, 0, n_ - 1);
    }
    return index(c[0], c[1], c[2]);
}

double VelocityGrid::truncation_defect() const
{
    KahanSum s;
    for (const auto& v : nodes_) s.add(maxwellian(v) * weight());
    return 1.0 - s.value();
}

double VelocityGrid::inner(const std::vector<double>& a, const std::vector<double>& b) const
{
    if (a.size() != size() || b.size() != size())
        throw Error(ErrorCode::GridMismatch, "vector length does not match velocity grid");
    KahanSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value() * weight();
}

double VelocityGrid::l2(const std::vector<double>& a) const { return std::sqrt(inner(a, a)); }

} // namespace kslab
