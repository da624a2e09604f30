#include "kslab/cli.hpp"
#include "kslab/collision.hpp"
#include "kslab/config.hpp"
#include "kslab/cycles.hpp"
#include "kslab/duhamel_mc.hpp"
#include "kslab/dvm_solver.hpp"
#include "kslab/error.hpp"
#include "kslab/kernel_table.hpp"
#include "kslab/parallel.hpp"
#include "kslab/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace kslab {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now()
{
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv_hex(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream o(p, std::ios::binary);
    if (!o) throw Error(ErrorCode::IOError, "cannot write " + p.string());
    o << s;
    if (!o) throw Error(ErrorCode::IOError, "write failed for " + p.string());
}

// Tolerance constants used across the modules, recorded in every manifest.
ordered_json tolerances()
{
    return {{"geometry.tol_geom", 1e-12},
            {"collision.null_space", 1e-3},
            {"collision.form_floor", -1e-8},
            {"boundary.mass_balance", 1e-12},
            {"boundary.dsigma_mass", 1e-10},
            {"cycles.unfolding_over_L", 1e-9},
            {"cycles.energy", 1e-12},
            {"cycles.chain_hard_cap", 1e6},
            {"duhamel_mc.agreement_stderr", 3.0},
            {"dvm_solver.mass_per_step", 1e-12},
            {"dvm_solver.cfl", 0.9},
            {"diagnostics.fit_min_points", 10}};
}

struct RunDir {
    std::string hash;
    fs::path dir;
    std::vector<std::string> files;
    fs::path file(const std::string& name)
    {
        const std::string n = hash + "_" + name;
        files.push_back(n);
        return dir / n;
    }
};

RunDir make_run_dir(const std::string& out, const std::string& hash)
{
    RunDir r{hash, fs::path(out) / hash, {}};
    std::error_code ec;
    fs::create_directories(r.dir, ec);
    if (ec) throw Error(ErrorCode::IOError, "cannot create " + r.dir.string() + ": " + ec.message());
    return r;
}

void write_manifest(RunDir& rd, const std::string& cmd, std::uint64_t seed, const std::string& start,
                    const ordered_json& results, int threads)
{
    ordered_json m;
    m["subcommand"] = cmd;
    m["config_hash"] = rd.hash;
    m["tool_version"] = kToolVersion;
    m["seed"] = seed;
    m["threads"] = threads;
    m["start"] = start;
    m["end"] = utc_now();
    m["tolerances"] = tolerances();
    const fs::path p = rd.file("manifest.json");
    m["outputs"] = rd.files;
    m["results"] = results;
    write_text(p, m.dump(2) + "\n");
}

RunConfig load_config(const std::string& path)
{
    RunConfig c = path.empty() ? RunConfig{} : parse_config(path);
    c.validate();
    return c;
}

std::vector<Probe> read_probes(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOError, "cannot read probe file " + path);
    std::vector<Probe> out;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line[0] == '#') continue;
        if (ln == 1 && line.find("x1") != std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream is(line);
        is.imbue(std::locale::classic());
        Probe p;
        if (!(is >> p.x.x >> p.x.y >> p.x.z >> p.v.x >> p.v.y >> p.v.z))
            throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(ln) + ", column 1: expected 6 numbers");
        out.push_back(p);
    }
    if (out.empty()) throw Error(ErrorCode::ValidationError, "probe file has no probes");
    return out;
}

// ---------------------------------------------------------------- subcommands

int cmd_simulate(const RunConfig& c, const std::string& out_dir, bool dump, int threads, std::ostream& out)
{
    const std::string start = utc_now();
    RunDir rd = make_run_dir(out_dir, config_hash(c));
    write_text(rd.file("config.txt"), serialize(c));
    const RunResult r = run_dvm(c);
    write_text(rd.file("diagnostics.csv"), diagnostics_csv(r.rows));
    if (dump || c.dump_final) write_field_binary(rd.file("final.bin").string(), r.final_field);
    auto fit = [](const DecayReport& d) {
        return ordered_json{{"norm", d.norm_name}, {"lambda", d.lambda},       {"prefactor", d.prefactor},
                            {"r_squared", d.r_squared}, {"t_lo", d.t_lo}, {"t_hi", d.t_hi},
                            {"points", d.points},     {"no_decay", d.no_decay}};
    };
    ordered_json res{{"max_mass_drift", r.max_mass_drift},
                     {"null_space_correction", r.correction},
                     {"kernel_asymmetry", r.asymmetry},
                     {"truncation_defect", r.truncation_defect},
                     {"fit_ok", r.fit_ok}};
    if (r.fit_ok) {
        res["fit_l2"] = fit(r.fit_l2);
        res["fit_linf_w"] = fit(r.fit_linf);
        res["fit_bdry_2plus"] = fit(r.fit_bdry);
    } else {
        res["fit_error"] = r.fit_error;
    }
    write_manifest(rd, "simulate-dvm", c.seed, start, res, threads);
    out << "run directory: " << rd.dir.string() << "\n";
    if (r.fit_ok) out << "lambda(l2) = " << num(r.fit_l2.lambda) << "  R^2 = " << num(r.fit_l2.r_squared) << "\n";
    out << "max mass drift = " << num(r.max_mass_drift) << "\n";
    return 0;
}

int cmd_sample(const RunConfig& c, double t, const std::string& probes_path, const std::string& out_dir, int threads,
               std::ostream& out)
{
    const std::string start = utc_now();
    const std::vector<Probe> probes = read_probes(probes_path);
    std::string extra = "t=" + num(t) + "\n";
    for (const auto& p : probes)
        extra += num(p.x.x) + "," + num(p.x.y) + "," + num(p.x.z) + "," + num(p.v.x) + "," + num(p.v.y) + "," + num(p.v.z) + "\n";
    RunDir rd = make_run_dir(out_dir, fnv_hex(serialize(c) + "sample-duhamel\n" + extra));
    write_text(rd.file("config.txt"), serialize(c));

    auto op = build_operator(c);
    McProblem pb;
    pb.domain = c.domain();
    pb.wall = c.wall;
    pb.f0 = initial_data(c);
    pb.g = source_term(c);
    pb.model = c.mc_model == "grid" ? VelocityModel::grid_model(*op, c.theta) : VelocityModel::continuous_model(*op, c.theta);
    EstimatorConfig ec;
    ec.samples = std::size_t(c.mc_samples);
    ec.depth_max = c.mc_depth_max;
    ec.roulette_depth = c.mc_roulette_depth;
    ec.roulette_p = c.mc_roulette_p;
    ec.collisions = c.mc_collisions;
    ec.source = c.mc_source;
    ec.seed = c.seed;
    const std::vector<PointEstimate> est = field_scan(pb, t, probes, ec);
    std::string csv = "x1,x2,x3,v1,v2,v3,mean,stderr,n_effective\n";
    std::size_t exceeded = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const Probe& p = probes[i];
        csv += num(p.x.x) + "," + num(p.x.y) + "," + num(p.x.z) + "," + num(p.v.x) + "," + num(p.v.y) + "," + num(p.v.z) +
               "," + num(est[i].mean) + "," + num(est[i].std_err) + "," + std::to_string(est[i].n_effective) + "\n";
        exceeded += est[i].depth_exceeded;
    }
    write_text(rd.file("estimates.csv"), csv);
    write_manifest(rd, "sample-duhamel", c.seed, start,
                   {{"t", t}, {"probes", probes.size()}, {"depth_exceeded", exceeded},
                    {"model", c.mc_model}, {"truncation_defect", pb.model->truncation_defect()}},
                   threads);
    out << "run directory: " << rd.dir.string() << "\n";
    return 0;
}

Vec3 sample_point(const Domain& d, Rng& rng)
{
    if (d.kind == DomainKind::Rect2D) return {d.L * (2 * rng.uniform() - 1), d.H() * rng.uniform(), 0};
    const double r = d.R * std::sqrt(rng.uniform()), a = 2 * M_PI * rng.uniform();
    return {d.L * (2 * rng.uniform() - 1), r * std::cos(a), r * std::sin(a)};
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

int cmd_trace(const RunConfig& c, const std::string& out_dir, int threads, std::ostream& out)
{
    const std::string start = utc_now();
    RunDir rd = make_run_dir(out_dir, fnv_hex(serialize(c) + "trace-cycles\n"));
    write_text(rd.file("config.txt"), serialize(c));
    const Domain d = c.domain();
    const std::size_t n = std::size_t(c.cycles_count);
    std::vector<std::string> lines(n);
    std::vector<std::size_t> exhausted(n, 0), truncated(n, 0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng(c.seed, stream_id(0x6379636c6573ull, k));
        const Vec3 x = sample_point(d, rng);
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const CycleRecord rec = trace_cycles(d, x, v, c.cycles_t0, rng, std::size_t(c.cycles_k_max));
        ordered_json j;
        j["seed"] = c.seed;
        j["index"] = k;
        j["x0"] = vec_json(rec.x0);
        j["v0"] = vec_json(rec.v0);
        j["t0"] = rec.t0;
        ordered_json ev = ordered_json::array();
        for (const auto& e : rec.events)
            ev.push_back({{"t", e.t}, {"x", vec_json(e.x)}, {"v", vec_json(e.v)}, {"chain_len", e.chain_len}});
        j["events"] = ev;
        j["terminal"] = terminal_name(rec.terminal);
        j["n_diffuse"] = rec.n_diffuse();
        lines[k] = j.dump();
        exhausted[k] = rec.terminal == Terminal::ExhaustedK;
        truncated[k] = rec.terminal == Terminal::TruncatedChain;
    }
    std::string all;
    for (const auto& l : lines) all += l + "\n";
    write_text(rd.file("cycles.jsonl"), all);
    std::size_t ne = 0, nt = 0;
    for (std::size_t k = 0; k < n; ++k) {
        ne += exhausted[k];
        nt += truncated[k];
    }
    write_manifest(rd, "trace-cycles", c.seed, start,
                   {{"count", n}, {"exhausted_k", ne}, {"truncated", nt}, {"domain", d.describe()}}, threads);
    out << "run directory: " << rd.dir.string() << "\n";
    return 0;
}

int cmd_kernel_table(const RunConfig& c, const std::string& out_dir, int threads, std::ostream& out)
{
    const std::string start = utc_now();
    RunDir rd = make_run_dir(out_dir, fnv_hex(serialize(c) + "kernel-table\n"));
    write_text(rd.file("config.txt"), serialize(c));
    const VelocityGrid g(c.velocity_n, c.velocity_vmax);
    // The integral depends on |v| only: evaluate once per node orbit.
    const OrbitSet orb = node_orbits(g);
    std::vector<double> vals(orb.reps.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < orb.reps.size(); ++r) vals[r] = ktheta_integral(g.node(orb.reps[r]), c.theta);
    std::map<long long, double> by_speed;
    for (std::size_t r = 0; r < orb.reps.size(); ++r) by_speed[std::llround(norm2(g.node(orb.reps[r])) * 1e6)] = vals[r];
    std::string csv = "vx,vy,vz,nu,int_ktheta,bound_ratio\n";
    double c_theta = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3 v = g.node(i);
        const double kt = by_speed.at(std::llround(norm2(v) * 1e6));
        const double ratio = (1 + norm(v)) * kt;
        c_theta = std::max(c_theta, ratio);
        csv += num(v.x) + "," + num(v.y) + "," + num(v.z) + "," + num(collision_frequency(v)) + "," + num(kt) + "," +
               num(ratio) + "\n";
    }
    write_text(rd.file("kernel_table.csv"), csv);
    write_manifest(rd, "kernel-table", c.seed, start,
                   {{"nodes", g.size()}, {"theta", c.theta}, {"C_theta", c_theta},
                    {"truncation_defect", g.truncation_defect()}},
                   threads);
    out << "run directory: " << rd.dir.string() << "\n";
    return 0;
}

int cmd_verify(bool quick, std::uint64_t seed, const std::string& out_dir, int threads, std::ostream& out)
{
    const std::string start = utc_now();
    BatteryOptions bo;
    bo.quick = quick;
    bo.seed = seed;
    RunDir rd = make_run_dir(out_dir, fnv_hex(std::string("verify\nquick=") + (quick ? "1" : "0") + "\nseed=" +
                                                std::to_string(seed) + "\n"));
    const std::vector<Check> checks = run_battery(bo);
    const std::string csv = battery_csv(checks);
    write_text(rd.file("verify.csv"), csv);
    std::size_t failed = 0;
    for (const auto& c : checks) failed += !c.pass;
    write_manifest(rd, "verify", seed, start, {{"checks", checks.size()}, {"failed", failed}, {"quick", quick}}, threads);
    out << csv;
    out << (failed ? "verification FAILED: " : "verification passed: ") << checks.size() - failed << "/" << checks.size()
        << "\n";
    return failed ? 3 : 0;
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::UnknownSubcommand:
    case ErrorCode::ThetaOutOfRange:
        return 1;
    default:
        return 2;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"kslab: kinetic slab decay experiments", "kslab"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "runs", probes;
    int threads = 0;
    long long seed = -1, samples = -1;
    int depth = -1;
    double t = 0.1;
    bool quick = false, dump = false;
    long long count = -1;

    auto common = [&](CLI::App* s) {
        s->add_option("-c,--config", config_path, "run configuration file")->check(CLI::ExistingFile);
        s->add_option("-o,--out", out_dir, "parent directory of the run directory");
        s->add_option("--threads", threads, "worker threads (KINETIC_SLAB_THREADS overrides)");
        s->add_option("--seed", seed, "override the configured seed");
    };
    CLI::App* sim = app.add_subcommand("simulate-dvm", "deterministic solve on the 2-D slab");
    common(sim);
    sim->add_flag("--dump-final", dump, "write the final state as a binary dump");
    CLI::App* mc = app.add_subcommand("sample-duhamel", "Monte Carlo point estimates of f(t,x,v)");
    common(mc);
    mc->add_option("-t,--time", t, "evaluation time")->check(CLI::PositiveNumber);
    mc->add_option("-p,--probes", probes, "probe CSV (x1,x2,x3,v1,v2,v3)")->required()->check(CLI::ExistingFile);
    mc->add_option("-n,--samples", samples, "samples per probe");
    mc->add_option("--depth", depth, "maximum walk depth");
    CLI::App* tc = app.add_subcommand("trace-cycles", "backward stochastic cycles as JSONL");
    common(tc);
    tc->add_option("-n,--count", count, "number of trajectories");
    CLI::App* kt = app.add_subcommand("kernel-table", "collision frequency and kernel bound sweep");
    common(kt);
    CLI::App* vf = app.add_subcommand("verify", "property battery");
    vf->add_flag("--quick", quick, "small grids and ensembles");
    vf->add_option("-o,--out", out_dir, "parent directory of the run directory");
    vf->add_option("--threads", threads, "worker threads");
    vf->add_option("--seed", seed, "battery seed");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        const int nthreads = resolve_threads(threads);
        set_threads(nthreads);
        if (vf->parsed()) return cmd_verify(quick, seed >= 0 ? std::uint64_t(seed) : 1, out_dir, nthreads, out);
        RunConfig c = load_config(config_path);
        if (seed >= 0) c.seed = std::uint64_t(seed);
        if (samples >= 0) c.mc_samples = long(samples);
        if (depth >= 0) c.mc_depth_max = depth;
        if (count >= 0) c.cycles_count = long(count);
        c.validate();
        if (sim->parsed()) return cmd_simulate(c, out_dir, dump, nthreads, out);
        if (mc->parsed()) return cmd_sample(c, t, probes, out_dir, nthreads, out);
        if (tc->parsed()) return cmd_trace(c, out_dir, nthreads, out);
        if (kt->parsed()) return cmd_kernel_table(c, out_dir, nthreads, out);
        throw Error(ErrorCode::UnknownSubcommand, "no subcommand");
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int run_cli(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace kslab
