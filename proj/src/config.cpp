#include "kslab/config.hpp"
#include "kslab/error.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace kslab {

namespace {

std::string fmt_double(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set; // throws std::invalid_argument
    std::function<std::string(const RunConfig&)> get;
};

double to_double(const std::string& s)
{
    // Locale independent: strtod under the "C" locale is what the program runs with.
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) throw std::invalid_argument("expected a number");
    return v;
}

long long to_int(const std::string& s)
{
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) throw std::invalid_argument("expected an integer");
    return v;
}

bool to_bool(const std::string& s)
{
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("expected true or false");
}

#define KD(key, field) \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
        [](const RunConfig& c) { return fmt_double(c.field); }}
#define KI(key, field, type) \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = type(to_int(v)); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define KB(key, field) \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}
#define KS(key, field) \
    Key{key, [](RunConfig& c, const std::string& v) { c.field = v; }, [](const RunConfig& c) { return c.field; }}

const std::vector<Key>& schema()
{
    static const std::vector<Key> keys = {
        Key{"domain.kind",
            [](RunConfig& c, const std::string& v) {
                if (v == "rect")
                    c.domain_kind = DomainKind::Rect2D;
                else if (v == "cylinder")
                    c.domain_kind = DomainKind::Cylinder3D;
                else
                    throw std::invalid_argument("expected rect or cylinder");
            },
            [](const RunConfig& c) { return std::string(c.domain_kind == DomainKind::Rect2D ? "rect" : "cylinder"); }},
        KD("domain.L", L),
        KD("domain.H", H),
        KI("velocity.n", velocity_n, int),
        KD("velocity.vmax", velocity_vmax),
        KI("space.nx1", nx1, int),
        KI("space.nx2", nx2, int),
        KD("wall.alpha_specular", wall.alpha_specular),
        KD("wall.alpha_diffuse", wall.alpha_diffuse),
        KD("theta", theta),
        KS("initial.kind", initial_kind),
        KD("initial.eps", initial_eps),
        KI("initial.chi", initial_chi, int),
        KS("source.kind", source_kind),
        KD("source.amp", source_amp),
        KB("nonlinear", nonlinear),
        KD("t_end", t_end),
        KD("time.dt", dt),
        KD("time.cfl", cfl),
        KS("scheme.space", space_scheme),
        KS("scheme.collision", collision_scheme),
        KB("scheme.v3_parity", v3_parity),
        KD("output.every", output_every),
        KB("output.dump_final", dump_final),
        KD("fit.lo", fit_lo),
        KD("fit.hi", fit_hi),
        KI("picard.iters", picard_iters, int),
        Key{"seed", [](RunConfig& c, const std::string& v) { c.seed = std::uint64_t(to_int(v)); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
        KS("mc.model", mc_model),
        KI("mc.samples", mc_samples, long),
        KI("mc.depth_max", mc_depth_max, int),
        KI("mc.roulette_depth", mc_roulette_depth, int),
        KD("mc.roulette_p", mc_roulette_p),
        KB("mc.collisions", mc_collisions),
        KB("mc.source", mc_source),
        KD("cycles.t0", cycles_t0),
        KI("cycles.k_max", cycles_k_max, int),
        KI("cycles.count", cycles_count, long),
    };
    return keys;
}

#undef KD
#undef KI
#undef KB
#undef KS

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void require(bool ok, const std::string& field, const std::string& constraint)
{
    if (!ok) throw Error(ErrorCode::ValidationError, field + " " + constraint);
}

} // namespace

Domain RunConfig::domain() const
{
    return domain_kind == DomainKind::Rect2D ? Domain::rect(L, H) : Domain::cylinder(L, H);
}

void RunConfig::validate() const
{
    require(L > 0, "domain.L", "must be > 0");
    require(H > 0, "domain.H", "must be > 0");
    require(velocity_n >= 4 && velocity_n % 2 == 0, "velocity.n", "must be even and >= 4");
    require(velocity_vmax > 0, "velocity.vmax", "must be > 0");
    require(nx1 >= 4, "space.nx1", "must be >= 4");
    require(nx2 >= 4, "space.nx2", "must be >= 4");
    wall.validate();
    require(theta >= 0 && theta < 0.25, "theta", "must lie in [0,1/4)");
    require(initial_kind == "zero" || initial_kind == "cos_chi" || initial_kind == "smooth", "initial.kind",
            "must be zero, cos_chi or smooth");
    require(initial_chi >= 0 && initial_chi <= 4, "initial.chi", "must lie in 0..4");
    require(source_kind == "none" || source_kind == "smooth", "source.kind", "must be none or smooth");
    require(t_end > 0, "t_end", "must be > 0");
    require(dt > 0 && dt <= t_end, "time.dt", "must lie in (0, t_end]");
    require(cfl > 0 && cfl <= 1, "time.cfl", "must lie in (0,1]");
    require(space_scheme == "upwind" || space_scheme == "minmod", "scheme.space", "must be upwind or minmod");
    require(collision_scheme == "exponential" || collision_scheme == "explicit" || collision_scheme == "semi_implicit",
            "scheme.collision", "must be exponential, explicit or semi_implicit");
    require(output_every > 0, "output.every", "must be > 0");
    require(fit_lo >= 0 && fit_lo < fit_hi && fit_hi <= 1, "fit", "needs 0 <= fit.lo < fit.hi <= 1");
    require(picard_iters >= 1, "picard.iters", "must be >= 1");
    require(mc_model == "grid" || mc_model == "continuous", "mc.model", "must be grid or continuous");
    require(mc_samples >= 2, "mc.samples", "must be >= 2");
    require(mc_depth_max >= 1, "mc.depth_max", "must be >= 1");
    require(mc_roulette_p > 0 && mc_roulette_p <= 1, "mc.roulette_p", "must lie in (0,1]");
    require(cycles_t0 > 0, "cycles.t0", "must be > 0");
    require(cycles_k_max >= 1, "cycles.k_max", "must be >= 1");
    require(cycles_count >= 1, "cycles.count", "must be >= 1");
}

RunConfig parse_config_text(const std::string& text)
{
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = hash == std::string::npos ? line : line.substr(0, hash);
        if (trim(body).empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ", column 1: expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string val = trim(body.substr(eq + 1));
        const int col = int(body.find_first_not_of(" \t")) + 1;
        const Key* k = nullptr;
        for (const auto& cand : schema())
            if (key == cand.name) k = &cand;
        if (!k)
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(lineno) + ", column " + std::to_string(col) + ": unknown key '" + key + "'");
        try {
            k->set(c, val);
        } catch (const std::invalid_argument& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ", column " +
                                                   std::to_string(int(eq) + 2) + ": " + key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

RunConfig parse_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::IOError, "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize(const RunConfig& c)
{
    std::string out;
    for (const auto& k : schema()) out += std::string(k.name) + " = " + k.get(c) + "\n";
    return out;
}

std::string default_config_text() { return serialize(RunConfig{}); }

std::string config_hash(const RunConfig& c)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : serialize(c)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

} // namespace kslab
