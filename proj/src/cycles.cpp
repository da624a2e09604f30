#include "kslab/cycles.hpp"
#include "kslab/boundary.hpp"
#include "kslab/error.hpp"

#include <algorithm>
#include <cmath>

namespace kslab {

const char* terminal_name(Terminal t)
{
    switch (t) {
    case Terminal::ReachedTimeZero: return "ReachedTimeZero";
    case Terminal::ExhaustedK: return "ExhaustedK";
    case Terminal::TruncatedChain: return "TruncatedChain";
    }
    return "?";
}

SpecularChain trace_specular_chain(const Domain& d, const Vec3& x, const Vec3& v, double t, const ChainOptions& opt)
{
    if (!(norm2(v) > 0)) throw Error(ErrorCode::ZeroVelocity, "chain needs v != 0");
    SpecularChain ch;
    ch.entries.push_back({x, t, v});

    const double speed = norm(v);
    const double transverse = d.kind == DomainKind::Rect2D ? std::abs(v.y) : std::hypot(v.y, v.z);
    std::size_t cap = opt.hard_cap;
    bool degenerate = transverse < 1e-12 * speed;
    if (degenerate) cap = std::size_t(std::ceil(std::abs(v.x) * std::max(t, 0.0) / (2 * d.L))) + 2;

    Vec3 xc = x, vc = v;
    double tc = t;
    for (;;) {
        const BoundaryHit hit = d.exit_time(xc, vc);
        if (!hit.finite()) {
            // Only possible for v1 = 0 and no transverse motion; excluded above.
            throw Error(ErrorCode::ZeroVelocity, "backward ray never leaves the domain");
        }
        const double tn = tc - hit.t_b;
        if (opt.stop_at_zero && tn <= 0) {
            ch.reached_zero = true;
            return ch;
        }
        if (hit.region == Region::Diffuse) {
            ch.arrived = true;
            ch.arrival_x = hit.x_b;
            ch.arrival_t = tn;
            ch.arrival_v = vc;
            ch.arrival_normal = hit.normal;
            ch.arrival_grazing = hit.grazing;
            return ch;
        }
        if (std::size_t(ch.M) >= cap) {
            if (degenerate) {
                ch.truncated = true;
                return ch;
            }
            throw Error(ErrorCode::ChainCapExceeded, "specular chain longer than " + std::to_string(cap));
        }
        vc = specular_reflect(hit.normal, vc);
        xc = hit.x_b;
        tc = tn;
        ++ch.M;
        ch.entries.push_back({xc, tc, vc});
    }
}

double CycleRecord::t_min() const
{
    if (terminal == Terminal::ReachedTimeZero) return 0.0;
    if (terminal == Terminal::ExhaustedK) return events.empty() ? t0 : events.back().t;
    return legs.back().entries.back().t;
}

CycleRecord trace_cycles(const Domain& d, const Vec3& x, const Vec3& v, double t0, Rng& rng, std::size_t k_max,
                         const DiffuseSampler& sampler)
{
    if (!(t0 > 0)) throw Error(ErrorCode::TimeOutOfRange, "t0 must be positive");
    if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 1");
    CycleRecord rec;
    rec.x0 = x;
    rec.v0 = v;
    rec.t0 = t0;
    ChainOptions opt;
    opt.stop_at_zero = true;
    Vec3 xc = x, vc = v;
    double tc = t0;
    for (;;) {
        rec.legs.push_back(trace_specular_chain(d, xc, vc, tc, opt));
        const SpecularChain& ch = rec.legs.back();
        if (ch.reached_zero) {
            rec.terminal = Terminal::ReachedTimeZero;
            return rec;
        }
        if (ch.truncated) {
            rec.terminal = Terminal::TruncatedChain;
            return rec;
        }
        DiffuseEvent ev;
        ev.x = ch.arrival_x;
        ev.t = ch.arrival_t;
        ev.v_pre = ch.arrival_v;
        ev.normal = ch.arrival_normal;
        ev.chain_len = ch.M;
        ev.v = sampler ? sampler(ev.x, ev.normal, rng) : sample_diffuse(ev.normal, rng);
        rec.events.push_back(ev);
        if (rec.events.size() >= k_max) {
            rec.terminal = Terminal::ExhaustedK;
            return rec;
        }
        xc = ev.x;
        vc = ev.v;
        tc = ev.t;
    }
}

PhasePoint eval_XV(const CycleRecord& rec, double s)
{
    if (!(s <= rec.t0 && s >= rec.t_min()))
        throw Error(ErrorCode::TimeOutOfRange, "s outside the traced interval");
    for (std::size_t i = 0; i < rec.legs.size(); ++i) {
        const SpecularChain& ch = rec.legs[i];
        const double t_end = i < rec.events.size() ? rec.events[i].t : rec.t_min();
        if (s < t_end && i + 1 < rec.legs.size()) continue;
        // Entries are ordered by decreasing time; pick the last with t >= s.
        const auto& e = ch.entries;
        std::size_t k = 0;
        while (k + 1 < e.size() && e[k + 1].t >= s) ++k;
        return {e[k].x - (e[k].t - s) * e[k].v, e[k].v};
    }
    const ChainEntry& last = rec.legs.back().entries.back();
    return {last.x - (last.t - s) * last.v, last.v};
}

Fold unfold_axial(double y1, double L)
{
    const double P = 4 * L;
    double z = std::fmod(y1 + L, P);
    if (z < 0) z += P;
    return {L - std::abs(z - 2 * L), z < 2 * L ? 1 : -1};
}

} // namespace kslab
