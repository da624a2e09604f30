#pragma once

#include "kslab/geometry.hpp"
#include "kslab/rng.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace kslab {

// Backward trajectory between diffuse events: start point plus every cap
// hit. entries[0] is the start; entries[j], j >= 1, lie on a cap with the
// velocity after reflection.
struct ChainEntry {
    Vec3 x;
    double t = 0;
    Vec3 v;
};

struct SpecularChain {
    std::vector<ChainEntry> entries;
    int M = 0;                 // number of cap hits
    bool truncated = false;    // degenerate (axial) velocity, chain cut at the cap
    bool reached_zero = false; // time 0 reached before the next hit
    // Hit on the diffuse region that ends the chain (valid unless truncated
    // or reached_zero). arrival_v is the velocity before the hit.
    bool arrived = false;
    Vec3 arrival_x, arrival_normal, arrival_v;
    double arrival_t = 0;
    bool arrival_grazing = false;
};

struct ChainOptions {
    bool stop_at_zero = false;
    std::size_t hard_cap = 1000000; // ChainCapExceeded beyond this
};

// Axial rays (transverse speed below 1e-12 |v|) never reach the wall; they
// are cut after ceil(|v1| t / (2L)) + 2 hits and flagged truncated.
SpecularChain trace_specular_chain(const Domain& d, const Vec3& x, const Vec3& v, double t,
                                   const ChainOptions& opt = {});

enum class Terminal { ReachedTimeZero, ExhaustedK, TruncatedChain };
const char* terminal_name(Terminal t);

struct DiffuseEvent {
    Vec3 x;      // position on the diffuse region
    double t = 0;
    Vec3 v;      // velocity drawn at the wall
    Vec3 v_pre;  // velocity arriving at the wall, |v_pre| is the previous leg speed
    Vec3 normal;
    int chain_len = 0; // cap hits on the leg that ended here
};

struct CycleRecord {
    Vec3 x0, v0;
    double t0 = 0;
    std::vector<SpecularChain> legs; // legs[i] starts at event i-1 (leg 0 at x0)
    std::vector<DiffuseEvent> events;
    Terminal terminal = Terminal::ReachedTimeZero;
    std::size_t n_diffuse() const { return events.size(); }
    // Earliest time covered by the record.
    double t_min() const;
};

// Velocity drawn at a diffuse point with outward normal n.
using DiffuseSampler = std::function<Vec3(const Vec3& x, const Vec3& n, Rng& rng)>;

CycleRecord trace_cycles(const Domain& d, const Vec3& x, const Vec3& v, double t0, Rng& rng, std::size_t k_max,
                         const DiffuseSampler& sampler = {});

struct PhasePoint {
    Vec3 X, V;
};
// Position and velocity on the record at time s in [t_min, t0].
PhasePoint eval_XV(const CycleRecord& rec, double s);

// Fold of the axial coordinate for a specular slab of half length L:
// z = (y1 + L) mod 4L, x1 = L - |z - 2L|, sign +1 on rising segments.
struct Fold {
    double x1;
    int sign;
};
Fold unfold_axial(double y1, double L);

} // namespace kslab
