#pragma once

#include "kslab/boundary.hpp"
#include "kslab/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kslab {

// Flat "section.key = value" run description. Every key has a default;
// unknown keys are rejected. serialize() writes every key in schema order
// with full round-trip precision.
struct RunConfig {
    // domain
    DomainKind domain_kind = DomainKind::Rect2D;
    double L = 1.0;
    double H = 2.0; // height (rect) or radius (cylinder)
    // velocity grid
    int velocity_n = 16;
    double velocity_vmax = 6.0;
    // space grid (rect only)
    int nx1 = 32, nx2 = 32;
    // walls
    WallModel wall;
    double theta = 0.125;
    // initial data: zero | cos_chi (eps cos(pi x2/H) chi_m) | smooth
    std::string initial_kind = "cos_chi";
    double initial_eps = 1e-3;
    int initial_chi = 0;
    // source: none | smooth
    std::string source_kind = "none";
    double source_amp = 0.0;
    bool nonlinear = false;
    double t_end = 20.0;
    double dt = 0.1;            // collision (splitting) step
    double cfl = 0.9;
    std::string space_scheme = "upwind";          // upwind | minmod
    std::string collision_scheme = "exponential"; // exponential | explicit | semi_implicit
    bool v3_parity = true;
    double output_every = 0.2;
    bool dump_final = false;
    double fit_lo = 0.2, fit_hi = 0.9; // fractions of t_end
    int picard_iters = 8;
    std::uint64_t seed = 1;
    // Monte Carlo
    std::string mc_model = "grid"; // grid | continuous
    long mc_samples = 10000;
    int mc_depth_max = 200;
    int mc_roulette_depth = 50;
    double mc_roulette_p = 0.8;
    bool mc_collisions = true;
    bool mc_source = true;
    // cycles
    double cycles_t0 = 50.0;
    int cycles_k_max = 400;
    long cycles_count = 1000;

    Domain domain() const;
    void validate() const; // ValidationError naming field and constraint
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);
std::string serialize(const RunConfig& c);
// Documented defaults as config text.
std::string default_config_text();
// 16 hex digits, FNV-1a of serialize(c).
std::string config_hash(const RunConfig& c);

} // namespace kslab
