// OpenMP kernels against their serial references. Arg 0 = Parallel, 1 = Serial.
#include <benchmark/benchmark.h>

#include "kslab/dvm_solver.hpp"
#include "kslab/duhamel_mc.hpp"
#include "kslab/gamma.hpp"
#include "kslab/kernel_table.hpp"
#include "kslab/parallel.hpp"

#include <cmath>

using namespace kslab;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(0) == 0 ? Exec::Parallel : Exec::Serial; }

GridPtr grid8() { return std::make_shared<const VelocityGrid>(8, 4.0); }

const CorrectedOperator& op8()
{
    static const CorrectedOperator op = correct_operator(KernelTable::build(grid8()));
    return op;
}

void BM_KernelTable(benchmark::State& st)
{
    set_threads(resolve_threads(0));
    auto g = grid8();
    for (auto _ : st) benchmark::DoNotOptimize(KernelTable::build(g, {}, exec_of(st)));
}
BENCHMARK(BM_KernelTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Gamma(benchmark::State& st)
{
    set_threads(resolve_threads(0));
    auto g = grid8();
    GammaOperator gam(g);
    std::vector<double> f(g->size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Vec3 v = g->node(i);
        f[i] = std::exp(-0.25 * norm2(v)) * (1 + 0.3 * v.x);
    }
    for (auto _ : st) benchmark::DoNotOptimize(gam.apply(f, f, exec_of(st)));
}
BENCHMARK(BM_Gamma)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DuhamelScan(benchmark::State& st)
{
    set_threads(resolve_threads(0));
    McProblem pb;
    pb.domain = Domain::rect(1, 2);
    pb.f0 = [](const Vec3& x, const Vec3& v) { return std::exp(-0.25 * norm2(v)) * std::cos(M_PI * x.y / 2); };
    pb.model = VelocityModel::grid_model(op8(), 0.125);
    const auto& g = *op8().grid;
    std::vector<Probe> probes;
    for (int k = 0; k < 8; ++k) probes.push_back({{-0.8 + 0.2 * k, 0.3 + 0.2 * k, 0}, g.node(37 * k + 100)});
    EstimatorConfig c;
    c.samples = 2000;
    for (auto _ : st) benchmark::DoNotOptimize(field_scan(pb, 0.5, probes, c, exec_of(st)));
}
BENCHMARK(BM_DuhamelScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// The transport sweep has no Exec switch; the serial reference is one thread.
void BM_Sweep(benchmark::State& st)
{
    RunConfig c;
    c.velocity_n = 8;
    c.velocity_vmax = 4;
    c.nx1 = c.nx2 = 32;
    c.space_scheme = "minmod";
    const auto op = std::make_shared<const CorrectedOperator>(op8());
    DvmSolver s(setup_from_config(c), op);
    s.set_initial(initial_data(c));
    set_threads(st.range(0) == 0 ? resolve_threads(0) : 1);
    const double dt = s.max_transport_dt();
    for (auto _ : st) {
        s.sweep(0, dt);
        s.sweep(1, dt);
    }
    set_threads(resolve_threads(0));
}
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
