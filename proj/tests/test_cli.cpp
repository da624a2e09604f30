#include <doctest.h>

#include "kslab/cli.hpp"
#include "kslab/config.hpp"
#include "kslab/error.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("kslab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr)
{
    std::ostringstream o, e;
    const int rc = run_cli(args, o, e);
    if (out) *out = o.str() + e.str();
    return rc;
}

fs::path only_dir(const fs::path& p)
{
    for (const auto& d : fs::directory_iterator(p))
        if (d.is_directory()) return d.path();
    return {};
}

const char* kTiny = "domain.kind = rect\n"
                    "velocity.n = 8\n"
                    "velocity.vmax = 4\n"
                    "space.nx1 = 6\n"
                    "space.nx2 = 6\n"
                    "t_end = 2\n"
                    "cycles.count = 20\n"
                    "mc.samples = 200\n";

} // namespace

TEST_CASE("minimal config takes the documented defaults")
{
    const RunConfig c = parse_config_text("domain.kind = rect\nt_end = 5\n");
    RunConfig d;
    d.t_end = 5;
    CHECK(serialize(c) == serialize(d));
    CHECK(c.velocity_n == 16);
    CHECK(c.velocity_vmax == 6.0);
    CHECK(c.theta == 0.125);
}

TEST_CASE("config round trip and errors")
{
    RunConfig c;
    c.L = 0.75;
    c.wall.alpha_specular = 0.25;
    c.initial_eps = 1.0 / 3.0;
    c.mc_model = "continuous";
    CHECK(serialize(parse_config_text(serialize(c))) == serialize(c));
    CHECK(config_hash(parse_config_text(serialize(c))) == config_hash(c));

    try {
        parse_config_text("t_end = 1\nwall.alpha_diffuse = 1.5\n").validate();
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationError);
        CHECK(std::string(e.what()).find("alpha must lie in [0,1]") != std::string::npos);
    }
    try {
        parse_config_text("t_end = 1\n  bogus.key = 3\n");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("column 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("space.nx1 = 2\n").validate(), Error);
    CHECK_THROWS_AS(parse_config_text("t_end = -1\n").validate(), Error);
}

TEST_CASE("dispatch exit codes")
{
    std::string out;
    CHECK(cli({"frobnicate"}, &out) == 1);
    CHECK(cli({"simulate-dvm", "--no-such-flag"}, &out) == 1);
    CHECK(out.find("Usage") != std::string::npos);
    CHECK(cli({}, &out) == 1);
    const fs::path d = scratch("bad");
    std::ofstream(d / "bad.cfg") << "wall.alpha_specular = 2\n";
    CHECK(cli({"simulate-dvm", "-c", (d / "bad.cfg").string(), "-o", d.string()}, &out) == 1);
    CHECK(out.find("alpha must lie in [0,1]") != std::string::npos);
}

TEST_CASE("simulate-dvm is byte reproducible and names files by hash")
{
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    std::ofstream(a / "run.cfg") << kTiny;
    CHECK(cli({"simulate-dvm", "-c", (a / "run.cfg").string(), "-o", (a / "out").string(), "--dump-final"}) == 0);
    CHECK(cli({"simulate-dvm", "-c", (a / "run.cfg").string(), "-o", (b / "out").string(), "--dump-final"}) == 0);
    const fs::path ra = only_dir(a / "out"), rb = only_dir(b / "out");
    REQUIRE(!ra.empty());
    const std::string hash = ra.filename().string();
    CHECK(hash == rb.filename().string());
    CHECK(hash.size() == 16);
    for (const auto& e : fs::directory_iterator(ra)) CHECK(e.path().filename().string().rfind(hash, 0) == 0);
    CHECK(slurp(ra / (hash + "_diagnostics.csv")) == slurp(rb / (hash + "_diagnostics.csv")));
    CHECK(slurp(ra / (hash + "_final.bin")) == slurp(rb / (hash + "_final.bin")));
    const std::string man = slurp(ra / (hash + "_manifest.json"));
    CHECK(man.find("\"config_hash\"") != std::string::npos);
    CHECK(man.find("\"tolerances\"") != std::string::npos);
}

TEST_CASE("sample-duhamel, trace-cycles and kernel-table outputs")
{
    const fs::path d = scratch("others");
    std::ofstream(d / "run.cfg") << kTiny;
    std::ofstream(d / "probes.csv") << "x1,x2,x3,v1,v2,v3\n0.1,0.5,0,0.5,-0.5,1.5\n-0.3,1.2,0,1.5,0.5,-0.5\n";
    const std::string cfg = (d / "run.cfg").string();
    CHECK(cli({"sample-duhamel", "-c", cfg, "-p", (d / "probes.csv").string(), "-t", "0.2", "-o", (d / "mc").string()}) == 0);
    const fs::path rm = only_dir(d / "mc");
    const std::string est = slurp(rm / (rm.filename().string() + "_estimates.csv"));
    CHECK(est.rfind("x1,x2,x3,v1,v2,v3,mean,stderr,n_effective\n", 0) == 0);
    CHECK(std::count(est.begin(), est.end(), '\n') == 3);

    std::ofstream(d / "off.csv") << "0.1,0.5,0,0.4,-0.5,1.5\n";
    CHECK(cli({"sample-duhamel", "-c", cfg, "-p", (d / "off.csv").string(), "-o", (d / "mc2").string()}) == 2);

    CHECK(cli({"trace-cycles", "-c", cfg, "-o", (d / "tc").string(), "--seed", "4"}) == 0);
    CHECK(cli({"trace-cycles", "-c", cfg, "-o", (d / "tc2").string(), "--seed", "4"}) == 0);
    const fs::path rt = only_dir(d / "tc"), rt2 = only_dir(d / "tc2");
    const std::string jl = slurp(rt / (rt.filename().string() + "_cycles.jsonl"));
    CHECK(jl == slurp(rt2 / (rt2.filename().string() + "_cycles.jsonl")));
    CHECK(std::count(jl.begin(), jl.end(), '\n') == 20);
    CHECK(jl.find("\"terminal\"") != std::string::npos);
    CHECK(jl.find("\"n_diffuse\"") != std::string::npos);

    CHECK(cli({"kernel-table", "-c", cfg, "-o", (d / "kt").string()}) == 0);
    const fs::path rk = only_dir(d / "kt");
    const std::string kt = slurp(rk / (rk.filename().string() + "_kernel_table.csv"));
    CHECK(kt.rfind("vx,vy,vz,nu,int_ktheta,bound_ratio\n", 0) == 0);
    CHECK(std::count(kt.begin(), kt.end(), '\n') == 8 * 8 * 8 + 1);
}

TEST_CASE("verify --quick passes")
{
    const fs::path d = scratch("verify");
    std::string out;
    CHECK(cli({"verify", "--quick", "-o", d.string()}, &out) == 0);
    CHECK(out.find("check_id,value,bound,status") != std::string::npos);
}
