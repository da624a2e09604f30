#pragma once

#include "kslab/vec3.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

namespace kslab {

// Signed permutation of velocity axes: g(v)_a = sign[a] * v[perm[a]].
struct AxisSymmetry {
    std::array<int, 3> perm{0, 1, 2};
    std::array<int, 3> sign{1, 1, 1};
};

const std::vector<AxisSymmetry>& octahedral_group();

// Cell-centred tensor lattice on [-v_max, v_max]^3 with midpoint weights h^3.
// Node i along an axis sits at -v_max + (i + 1/2) h, so no node has a zero
// component and every coordinate sign flip maps nodes onto nodes.
class VelocityGrid {
public:
    VelocityGrid(int n_per_axis, double v_max);

    int n() const { return n_; }
    double v_max() const { return v_max_; }
    double h() const { return h_; }
    double weight() const { return h_ * h_ * h_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<Vec3>& nodes() const { return nodes_; }
    const Vec3& node(std::size_t i) const { return nodes_[i]; }
    std::vector<double> weights() const { return std::vector<double>(size(), weight()); }

    double coord(int i) const { return -v_max_ + (i + 0.5) * h_; }
    std::size_t index(int i, int j, int k) const { return (std::size_t(i) * n_ + j) * n_ + k; }
    std::array<int, 3> ijk(std::size_t idx) const
    {
        int k = int(idx % n_);
        int j = int((idx / n_) % n_);
        int i = int(idx / (std::size_t(n_) * n_));
        return {i, j, k};
    }
    // Node index of the velocity with component `axis` negated.
    std::size_t reflect(std::size_t idx, int axis) const;
    std::size_t apply(const AxisSymmetry& g, std::size_t idx) const;
    // Index of the nearest node (clamped to the box).
    std::size_t nearest(const Vec3& v) const;

    // 1 - sum_i w_i mu(v_i).
    double truncation_defect() const;
    bool same_as(const VelocityGrid& o) const { return n_ == o.n_ && v_max_ == o.v_max_; }

    // Values of a function at the nodes.
    template <class F>
    std::vector<double> sample(F&& fn) const
    {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = fn(nodes_[i]);
        return out;
    }

    double inner(const std::vector<double>& a, const std::vector<double>& b) const;
    double l2(const std::vector<double>& a) const;

private:
    int n_;
    double v_max_;
    double h_;
    std::vector<Vec3> nodes_;
};

using GridPtr = std::shared_ptr<const VelocityGrid>;

} // namespace kslab
