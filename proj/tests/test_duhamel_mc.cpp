#include <doctest.h>

#include "kslab/collision.hpp"
#include "kslab/cycles.hpp"
#include "kslab/duhamel_mc.hpp"
#include "kslab/error.hpp"
#include "kslab/kernel_table.hpp"

#include <algorithm>
#include <cmath>

using namespace kslab;

namespace {

const CorrectedOperator& small_op()
{
    static const CorrectedOperator op =
        correct_operator(KernelTable::build(std::make_shared<const VelocityGrid>(8, 4.0)));
    return op;
}

McProblem base_problem()
{
    McProblem pb;
    pb.domain = Domain::rect(1, 2);
    pb.f0 = [](const Vec3& x, const Vec3& v) {
        return std::exp(-0.25 * norm2(v)) * (1 + 0.5 * std::cos(M_PI * x.y / 2) + 0.2 * x.x * v.x);
    };
    pb.model = VelocityModel::grid_model(small_op(), 0.125);
    return pb;
}

std::vector<Probe> probes(int n, std::uint64_t seed)
{
    const auto& g = *small_op().grid;
    Rng r(seed, 51);
    std::vector<Probe> out;
    for (int k = 0; k < n; ++k) {
        std::size_t i;
        do i = std::size_t(r.uniform() * double(g.size()));
        while (norm(g.node(i)) > 2.5);
        out.push_back({{2 * r.uniform() - 1, 2 * r.uniform(), 0}, g.node(i)});
    }
    return out;
}

} // namespace

TEST_CASE("zero data gives an exact zero")
{
    McProblem pb = base_problem();
    pb.f0 = [](const Vec3&, const Vec3&) { return 0.0; };
    EstimatorConfig c;
    c.samples = 500;
    const auto e = estimate_f(pb, 0.3, probes(1, 1)[0], c);
    CHECK(e.mean == 0.0);
    CHECK(e.std_err == 0.0);
}

TEST_CASE("collisionless transport equals the folded closed form per sample")
{
    McProblem pb = base_problem();
    pb.wall.alpha_diffuse = 0; // all walls specular
    EstimatorConfig c;
    c.collisions = false;
    c.source = false;
    Rng rng(2, 52);
    for (const Probe& p : probes(100, 2)) {
        for (double t : {0.1, 0.9, 3.7}) {
            const SampleResult s = estimate_sample(pb, t, p, c, rng);
            const Fold f1 = unfold_axial(p.x.x - t * p.v.x, 1.0);
            const Fold f2 = unfold_axial(p.x.y - 1 - t * p.v.y, 1.0);
            const Vec3 x0{f1.x1, f2.x1 + 1, 0}, v0{f1.sign * p.v.x, f2.sign * p.v.y, p.v.z};
            CHECK(std::abs(s.value - std::exp(-collision_frequency(p.v) * t) * pb.f0(x0, v0)) < 1e-12);
        }
    }
}

TEST_CASE("pure attenuation has no variance")
{
    McProblem pb = base_problem();
    pb.wall.alpha_diffuse = 0;
    pb.f0 = [](const Vec3&, const Vec3&) { return 1.0; };
    EstimatorConfig c;
    c.collisions = false;
    c.samples = 200;
    const Probe p = probes(1, 3)[0];
    const auto e = estimate_f(pb, 0.8, p, c);
    CHECK(e.mean == doctest::Approx(std::exp(-collision_frequency(p.v) * 0.8)).epsilon(1e-13));
    CHECK(e.std_err < 1e-15);
}

TEST_CASE("absolute kernel keeps every sample nonnegative")
{
    McProblem pb = base_problem();
    pb.model = VelocityModel::grid_model(small_op(), 0.125, true);
    pb.f0 = [](const Vec3& x, const Vec3& v) { return std::exp(-0.25 * norm2(v)) * (1 + 0.5 * std::cos(M_PI * x.y / 2)); };
    EstimatorConfig c;
    Rng rng(4, 54);
    for (const Probe& p : probes(20, 4))
        for (int k = 0; k < 200; ++k) CHECK(estimate_sample(pb, 0.3, p, c, rng).value >= 0);
}

TEST_CASE("probe permutation and thread scheduling do not change results")
{
    const McProblem pb = base_problem();
    EstimatorConfig c;
    c.samples = 400;
    auto ps = probes(6, 5);
    const auto a = field_scan(pb, 0.2, ps, c, Exec::Parallel);
    std::vector<Probe> rev(ps.rbegin(), ps.rend());
    const auto b = field_scan(pb, 0.2, rev, c, Exec::Serial);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CHECK(a[i].mean == b[ps.size() - 1 - i].mean);
        CHECK(a[i].std_err == b[ps.size() - 1 - i].std_err);
    }
    CHECK(estimate_f(pb, 0.2, ps[0], c).mean == a[0].mean);
}

TEST_CASE("standard error follows the square-root law")
{
    const McProblem pb = base_problem();
    EstimatorConfig c1, c2;
    c1.samples = 2000;
    c2.samples = 4000;
    double r = 0;
    const auto ps = probes(20, 6);
    for (const Probe& p : ps) r += estimate_f(pb, 0.2, p, c2).std_err / estimate_f(pb, 0.2, p, c1).std_err;
    r /= double(ps.size());
    CHECK(std::abs(r - 1 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));
}

TEST_CASE("estimator input validation")
{
    const McProblem pb = base_problem();
    EstimatorConfig c;
    c.roulette_p = 0;
    CHECK_THROWS_AS(estimate_f(pb, 0.2, probes(1, 7)[0], c), Error);
    c = {};
    CHECK_THROWS_AS(estimate_f(pb, 0.2, {{0, 1, 0}, {0.123, 0, 0}}, c), Error);
    CHECK_THROWS_AS(VelocityModel::grid_model(small_op(), 0.3), Error);
}

TEST_CASE("depth histogram decays")
{
    McProblem pb = base_problem();
    EstimatorConfig c;
    c.samples = 4000;
    const auto e = estimate_f(pb, 0.5, probes(1, 8)[0], c);
    std::size_t total = 0;
    for (auto h : e.depth_histogram) total += h;
    CHECK(total == c.samples);
    // Poisson-like depth counts: the tail past the mean is decreasing.
    std::size_t peak = std::max_element(e.depth_histogram.begin(), e.depth_histogram.end()) - e.depth_histogram.begin();
    for (std::size_t k = peak + 2; k + 1 < 25; ++k) CHECK(e.depth_histogram[k + 1] <= e.depth_histogram[k] + 30);
}
