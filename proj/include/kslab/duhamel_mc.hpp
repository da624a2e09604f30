#pragma once

#include "kslab/alias.hpp"
#include "kslab/boundary.hpp"
#include "kslab/geometry.hpp"
#include "kslab/kernel_table.hpp"
#include "kslab/parallel.hpp"
#include "kslab/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace kslab {

// Pointwise Monte Carlo estimator for the linear problem
//   d_t f + v.grad f + L f = g,  f(0) = f0,  Maxwell walls,
// following backward characteristics. The walk carries h = w f with
// w = e^{theta |v|^2}; with theta = 1/8 the per-collision weight factor
// (row sum of |w_v k / w_u| over nu) stays near 1.6 on the shipped grids.

using InitialData = std::function<double(const Vec3& x, const Vec3& v)>;
using SourceTerm = std::function<double(double t, const Vec3& x, const Vec3& v)>;

// Velocity model seen by the walk.
//  Grid: velocities are nodes, collisions use the rows of a discrete
//        operator, diffuse re-emission uses the discrete wall measure.
//        Walls must be axis aligned (Rect2D, or cylinder without lateral hits).
//  Continuous: analytic nu, re-emission from the continuous wall measure
//        (resampled above v_max), collisions use the row of the nearest node.
class VelocityModel {
public:
    enum class Kind { Grid, Continuous };

    // K_ij taken as diag(nu) - L for the given operator; theta is the weight exponent.
    static std::shared_ptr<VelocityModel> grid_model(const CorrectedOperator& op, double theta, bool abs_kernel = false);
    static std::shared_ptr<VelocityModel> continuous_model(const CorrectedOperator& op, double theta,
                                                           bool abs_kernel = false);

    Kind kind() const { return kind_; }
    const VelocityGrid& grid() const { return *grid_; }
    double theta() const { return theta_; }
    double weight(const Vec3& v) const { return std::exp(theta_ * norm2(v)); }
    double nu(const Vec3& v, std::int64_t node) const;
    // sign(K_ij w_i/w_j) * S_i / nu_i for the sampled column j.
    struct Step {
        std::int64_t node;
        Vec3 v;
        double factor;
    };
    Step collide(const Vec3& v, std::int64_t node, Rng& rng) const;
    Step diffuse(const Vec3& v, std::int64_t node, const Vec3& normal, Rng& rng) const;
    Step specular(const Vec3& v, std::int64_t node, const Vec3& normal) const;
    // Row sum S_i / nu_i (reported, drives the variance).
    double growth(std::size_t i) const { return row_sum_[i] / nu_[i]; }
    // Mass of the continuous wall measure beyond v_max (continuous model).
    double truncation_defect() const { return defect_; }

private:
    Kind kind_ = Kind::Grid;
    GridPtr grid_;
    double theta_ = 0.125;
    std::vector<double> nu_, row_sum_, w_, sqmu_;
    std::vector<AliasTable> rows_;
    std::vector<std::vector<std::int8_t>> sign_;
    // Discrete wall measures for normals -e1, +e1, -e2, +e2, -e3, +e3.
    std::vector<std::shared_ptr<DiscreteWall>> walls_;
    std::vector<AliasTable> emit_;
    double defect_ = 0;
    int wall_slot(const Vec3& n) const;
};

struct EstimatorConfig {
    std::size_t samples = 10000;
    int depth_max = 200;      // collisions + diffuse events
    int roulette_depth = 50;  // Russian roulette applies beyond this depth
    double roulette_p = 0.8;
    bool collisions = true;
    bool source = true;
    std::uint64_t seed = 1;
    void validate() const;
};

struct PointEstimate {
    double mean = 0;
    double std_err = 0;
    std::size_t n_effective = 0;        // samples that ended at time 0
    std::size_t depth_exceeded = 0;     // samples cut at depth_max
    std::vector<std::size_t> depth_histogram;
};

struct Probe {
    Vec3 x, v;
};
// Stream key of a probe, derived from its coordinates so that reordering
// a probe list reorders the results and nothing else.
std::uint64_t probe_key(const Probe& p);

struct McProblem {
    Domain domain;
    WallModel wall;
    InitialData f0;
    SourceTerm g;                     // may be empty
    std::shared_ptr<const VelocityModel> model;
};

// Estimate f(t, x, v). Sample k of the probe draws from the stream
// (seed, mix(probe_key(p), k)), so results do not depend on scheduling.
PointEstimate estimate_f(const McProblem& pb, double t, const Probe& p, const EstimatorConfig& cfg,
                         Exec exec = Exec::Parallel);

// One sample of the estimator (exposed for the per-sample tests).
struct SampleResult {
    double value;
    int depth;
    bool reached_zero;
    bool depth_exceeded;
};
SampleResult estimate_sample(const McProblem& pb, double t, const Probe& p, const EstimatorConfig& cfg, Rng& rng);

std::vector<PointEstimate> field_scan(const McProblem& pb, double t, const std::vector<Probe>& probes,
                                      const EstimatorConfig& cfg, Exec exec = Exec::Parallel);

} // namespace kslab
