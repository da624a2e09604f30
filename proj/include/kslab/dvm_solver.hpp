#pragma once

#include "kslab/config.hpp"
#include "kslab/diagnostics.hpp"
#include "kslab/gamma.hpp"
#include "kslab/kernel_table.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace kslab {

enum class SpatialScheme { Upwind, Minmod };
enum class CollisionScheme { Exponential, Explicit, SemiImplicit };

// Linear collision operator restricted to the stored velocity nodes, with
// its eigendecomposition for the exponential step.
class CollisionPropagator {
public:
    CollisionPropagator(const CorrectedOperator& op, const std::vector<std::size_t>& nodes,
                        const std::vector<double>& mult);
    std::size_t size() const { return n_; }
    const std::vector<double>& L() const { return L_; } // symmetric, row-major
    const std::vector<double>& nu() const { return nu_; }
    const std::vector<double>& eigenvalues() const { return lam_; }
    // exp(-L dt) and int_0^dt exp(-L s) ds (both symmetric).
    std::vector<double> exp_matrix(double dt) const;
    std::vector<double> phi1_matrix(double dt) const;

private:
    std::size_t n_;
    std::vector<double> L_, nu_, lam_, V_;
    std::vector<double> spectral(const std::function<double(double)>& fn) const;
};

using FieldFunction = std::function<double(const Vec3& x, const Vec3& v)>;
using TimeFieldFunction = std::function<double(double t, const Vec3& x, const Vec3& v)>;

struct DvmSetup {
    Domain domain = Domain::rect(1, 2);
    int nx1 = 32, nx2 = 32;
    WallModel wall;
    double dt = 0.1; // collision step; transport is sub-stepped under the CFL limit
    double cfl = 0.9;
    SpatialScheme scheme = SpatialScheme::Upwind;
    CollisionScheme collision = CollisionScheme::Exponential;
    bool nonlinear = false;
    bool v3_parity = true;
    bool transport = true;  // off: collision-only dynamics
    bool collisions = true; // off: free transport
};

class DvmSolver {
public:
    // op: stepper operator (symmetric, exact null space). gamma required when nonlinear.
    DvmSolver(const DvmSetup& s, std::shared_ptr<const CorrectedOperator> op,
              std::shared_ptr<const GammaOperator> gamma = nullptr);

    const DvmSetup& setup() const { return s_; }
    const DistributionField& field() const { return f_; }
    DistributionField& field() { return f_; }
    double time() const { return t_; }
    double max_transport_dt() const;
    const CollisionPropagator& propagator() const { return *prop_; }

    void set_initial(const FieldFunction& f0);
    // Source frozen at the midpoint of each collision step.
    void set_source(const TimeFieldFunction& g) { source_ = g; }
    // Source given directly as cells x stored nodes, per collision step index.
    using StepSource = std::function<void(std::size_t step, double t, std::vector<double>& out)>;
    void set_step_source(const StepSource& s) { step_source_ = s; }
    // Called with the state entering each collision stage.
    using StageHook = std::function<void(std::size_t step, const DistributionField& f)>;
    void set_stage_hook(const StageHook& h) { stage_hook_ = h; }

    // One Strang step: transport dt/2, collision dt, transport dt/2.
    void step();
    // Transport by tau in CFL-limited substeps.
    void transport(double tau);
    // Single directional transport sweep; CFLViolation if dt is too large.
    void sweep(int axis, double dt);
    void collide(double dt, std::size_t step_index);

    double mass() const;
    std::size_t steps_taken() const { return steps_; }

private:
    DvmSetup s_;
    std::shared_ptr<const CorrectedOperator> op_;
    std::shared_ptr<const GammaOperator> gamma_;
    std::unique_ptr<CollisionPropagator> prop_;
    DistributionField f_;
    double t_ = 0;
    std::size_t steps_ = 0;
    std::vector<double> E_, P1_; // cached for s_.dt
    TimeFieldFunction source_;
    StepSource step_source_;
    StageHook stage_hook_;
    // per stored node
    std::vector<double> vel_[2], sqmu_;
    std::vector<std::size_t> mirror_[2];
    std::vector<double> D_; // wall normalisation per axis
    void check_finite() const;
};

SpatialScheme parse_space_scheme(const std::string& s);
CollisionScheme parse_collision_scheme(const std::string& s);

// Initial data and source named in the run configuration.
FieldFunction initial_data(const RunConfig& c);
TimeFieldFunction source_term(const RunConfig& c); // empty for source.kind = none

struct DiagnosticsRow {
    double t;
    Norms n;
};

struct RunResult {
    std::vector<DiagnosticsRow> rows;
    DistributionField final_field;
    std::vector<Snapshot> snapshots;
    double mass0 = 0, mass_scale = 0, max_mass_drift = 0; // drift relative to mass_scale
    double correction = 0, asymmetry = 0, truncation_defect = 0;
    DecayReport fit_l2, fit_linf, fit_bdry;
    bool fit_ok = false;
    std::string fit_error;
    double seconds = 0;
};

struct RunOptions {
    bool keep_snapshots = false;
    // Overrides applied on top of the config (refinement studies).
    std::shared_ptr<const CorrectedOperator> op;
    std::shared_ptr<const GammaOperator> gamma;
};

DvmSetup setup_from_config(const RunConfig& c);
// Builds the kernel table unless one is supplied.
std::shared_ptr<const CorrectedOperator> build_operator(const RunConfig& c);
RunResult run_dvm(const RunConfig& c, const RunOptions& opt = {});

// Diagnostics CSV (header t,l2,linf_w,norm_a,norm_b,norm_c,norm_IP_nu,bdry_2plus,mass).
std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows);
// Binary dump: "KSLABF64" magic, uint32 version, uint32 nx1, nx2, n, n_stored,
// then stored node indices (uint64) and the row-major double payload.
void write_field_binary(const std::string& path, const DistributionField& f);
DistributionField read_field_binary(const std::string& path, const Domain& d);

struct PicardResult {
    std::vector<double> distances; // sup_w distance between consecutive iterates
    std::vector<double> ratios;
    std::vector<DistributionField> finals;
    DistributionField limit;
};
// f^{l+1} solves the linear problem with source Gamma(f^l, f^l), f^0 = 0.
PicardResult picard_iterate(const RunConfig& c, int n_iters, const RunOptions& opt = {});

} // namespace kslab
