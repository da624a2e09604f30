#include "kslab/duhamel_mc.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"

#include <cmath>
#include <exception>
#include <cstring>
#include <limits>
#include <sstream>

namespace kslab {

namespace {

void check_theta(double theta)
{
    if (!(theta >= 0 && theta < 0.25)) throw Error(ErrorCode::ThetaOutOfRange, "theta must lie in [0, 1/4)");
}

} // namespace

std::shared_ptr<VelocityModel> VelocityModel::grid_model(const CorrectedOperator& op, double theta, bool abs_kernel)
{
    check_theta(theta);
    auto m = std::make_shared<VelocityModel>();
    m->kind_ = Kind::Grid;
    m->grid_ = op.grid;
    m->theta_ = theta;
    const VelocityGrid& g = *op.grid;
    const std::size_t N = g.size();
    m->nu_ = op.nu;
    m->w_ = g.sample([theta](const Vec3& v) { return std::exp(theta * norm2(v)); });
    m->sqmu_ = g.sample([](const Vec3& v) { return sqrt_maxwellian(v); });
    m->row_sum_.resize(N);
    m->rows_.resize(N);
    m->sign_.assign(N, std::vector<std::int8_t>(N, 1));
    std::vector<double> wts(N);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            const double k = op.K(i, j) * m->w_[i] / m->w_[j];
            wts[j] = std::abs(k);
            if (!abs_kernel && k < 0) m->sign_[i][j] = -1;
        }
        m->rows_[i] = AliasTable(wts);
        m->row_sum_[i] = m->rows_[i].total();
    }
    // Re-emission on the outgoing side n.u > 0 with probability ~ mu(u) (n.u).
    for (int axis = 0; axis < 3; ++axis)
        for (int sign : {-1, 1}) {
            auto wall = std::make_shared<DiscreteWall>(op.grid, axis, sign);
            std::vector<double> p(N, 0.0);
            for (std::size_t i : wall->outgoing()) p[i] = m->sqmu_[i] * m->sqmu_[i] * sign * g.node(i)[axis];
            m->walls_.push_back(wall);
            m->emit_.emplace_back(p);
        }
    return m;
}

std::shared_ptr<VelocityModel> VelocityModel::continuous_model(const CorrectedOperator& op, double theta,
                                                               bool abs_kernel)
{
    auto m = grid_model(op, theta, abs_kernel);
    m->kind_ = Kind::Continuous;
    const double vm = m->grid_->v_max();
    m->defect_ = 1 - (1 - std::exp(-vm * vm / 2)) * std::pow(std::erf(vm / std::sqrt(2.0)), 2);
    return m;
}

int VelocityModel::wall_slot(const Vec3& n) const
{
    for (int a = 0; a < 3; ++a)
        if (std::abs(std::abs(n[a]) - 1) < 1e-12) return 2 * a + (n[a] > 0 ? 1 : 0);
    throw Error(ErrorCode::GridAsymmetry, "grid velocity model needs axis-aligned walls");
}

double VelocityModel::nu(const Vec3& v, std::int64_t node) const
{
    if (kind_ == Kind::Grid) return nu_[std::size_t(node)];
    return collision_frequency(v);
}

VelocityModel::Step VelocityModel::collide(const Vec3& v, std::int64_t node, Rng& rng) const
{
    const std::size_t i = node >= 0 ? std::size_t(node) : grid_->nearest(v);
    const std::size_t j = rows_[i].sample(rng);
    return {std::int64_t(j), grid_->node(j), sign_[i][j] * row_sum_[i] / nu_[i]};
}

VelocityModel::Step VelocityModel::diffuse(const Vec3& v, std::int64_t node, const Vec3& normal, Rng& rng) const
{
    const double num = std::exp(theta_ * norm2(v)) * sqrt_maxwellian(v);
    if (kind_ == Kind::Grid) {
        const int s = wall_slot(normal);
        const std::size_t u = emit_[s].sample(rng);
        (void)node;
        return {std::int64_t(u), grid_->node(u), num / (w_[u] * sqmu_[u])};
    }
    const double vm = grid_->v_max();
    Vec3 u;
    do {
        u = sample_diffuse(normal, rng);
    } while (std::abs(u.x) > vm || std::abs(u.y) > vm || std::abs(u.z) > vm);
    return {-1, u, num / (std::exp(theta_ * norm2(u)) * sqrt_maxwellian(u))};
}

VelocityModel::Step VelocityModel::specular(const Vec3& v, std::int64_t node, const Vec3& normal) const
{
    if (kind_ == Kind::Grid) {
        const int s = wall_slot(normal);
        const std::size_t r = grid_->reflect(std::size_t(node), s / 2);
        return {std::int64_t(r), grid_->node(r), 1.0};
    }
    return {-1, specular_reflect(normal, v), 1.0};
}

void EstimatorConfig::validate() const
{
    if (!(roulette_p > 0 && roulette_p <= 1)) throw Error(ErrorCode::ValidationError, "roulette_p must lie in (0,1]");
    if (depth_max < 1) throw Error(ErrorCode::ValidationError, "depth_max must be >= 1");
    if (samples < 2) throw Error(ErrorCode::ValidationError, "samples must be >= 2");
}

std::uint64_t probe_key(const Probe& p)
{
    std::uint64_t h = 0x51ED270B27B5A3C1ull;
    for (double c : {p.x.x, p.x.y, p.x.z, p.v.x, p.v.y, p.v.z}) {
        std::uint64_t b;
        std::memcpy(&b, &c, sizeof b);
        h = mix64(h ^ b);
    }
    return h;
}

SampleResult estimate_sample(const McProblem& pb, double t, const Probe& p, const EstimatorConfig& cfg, Rng& rng)
{
    const VelocityModel& m = *pb.model;
    const Domain& d = pb.domain;
    Vec3 x = p.x, V = p.v;
    std::int64_t node = -1;
    if (m.kind() == VelocityModel::Kind::Grid) {
        node = std::int64_t(m.grid().nearest(V));
        if (norm(m.grid().node(std::size_t(node)) - V) > 1e-9 * (1 + norm(V)))
            throw Error(ErrorCode::InvalidArgument, "grid velocity model needs a node velocity");
        V = m.grid().node(std::size_t(node));
    }
    const double w0 = m.weight(V);
    double W = 1, acc = 0, tc = t;
    int depth = 0;
    const bool with_source = cfg.source && static_cast<bool>(pb.g);

    auto check = [&](double val) {
        if (!std::isfinite(val)) {
            std::ostringstream os;
            os << "weight overflow at depth " << depth << ", t=" << tc << ", x=(" << x.x << "," << x.y << "," << x.z
               << "), v=(" << V.x << "," << V.y << "," << V.z << ")";
            throw Error(ErrorCode::NonFiniteWeight, os.str());
        }
    };

    for (long guard = 0;; ++guard) {
        if (guard > 10000000) return {acc / w0, depth, false, true};
        const double nu = m.nu(V, node);
        const double tau_c = cfg.collisions ? rng.exponential(nu) : std::numeric_limits<double>::infinity();
        const BoundaryHit hit = d.exit_time(x, V);
        const double tau_b = hit.t_b;
        const double seg = std::min({tau_c, tau_b, tc});
        const double wv = m.weight(V);

        if (with_source && seg > 0) {
            const double s = seg * rng.uniform();
            const double att = cfg.collisions ? 1.0 : std::exp(-nu * s);
            acc += W * seg * att * wv * pb.g(tc - s, x - s * V, V);
            check(acc);
        }
        if (seg == tc) {
            const double att = cfg.collisions ? 1.0 : std::exp(-nu * tc);
            acc += W * att * wv * pb.f0(x - tc * V, V);
            check(acc);
            return {acc / w0, depth, true, false};
        }
        if (!cfg.collisions) W *= std::exp(-nu * seg);
        tc -= seg;

        VelocityModel::Step st;
        if (seg == tau_c) {
            x = x - tau_c * V;
            st = m.collide(V, node, rng);
        } else {
            x = hit.x_b;
            const double alpha = pb.wall.alpha(hit.region);
            if (alpha > 0 && (alpha >= 1 || rng.uniform() < alpha))
                st = m.diffuse(V, node, hit.normal, rng);
            else {
                st = m.specular(V, node, hit.normal);
                node = st.node;
                V = st.v;
                continue; // specular bounces are not recursion levels
            }
        }
        node = st.node;
        V = st.v;
        W *= st.factor;
        check(W);
        ++depth;
        if (depth >= cfg.depth_max) return {acc / w0, depth, false, true};
        if (depth > cfg.roulette_depth) {
            if (rng.uniform() >= cfg.roulette_p) return {acc / w0, depth, false, false};
            W /= cfg.roulette_p;
        }
    }
}

PointEstimate estimate_f(const McProblem& pb, double t, const Probe& p, const EstimatorConfig& cfg, Exec exec)
{
    cfg.validate();
    if (!(t > 0)) throw Error(ErrorCode::TimeOutOfRange, "t must be positive");
    const std::size_t n = cfg.samples;
    std::vector<SampleResult> res(n);
    const std::uint64_t key = probe_key(p);
    // Exceptions cannot leave the parallel region; keep the one from the lowest sample.
    std::exception_ptr err;
    std::size_t err_at = n;
#pragma omp parallel for schedule(dynamic, 64) if (exec == Exec::Parallel)
    for (std::size_t k = 0; k < n; ++k) {
        try {
            Rng rng(cfg.seed, stream_id(key, k));
            res[k] = estimate_sample(pb, t, p, cfg, rng);
        } catch (...) {
#pragma omp critical(kslab_mc_error)
            if (k < err_at) {
                err_at = k;
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
    PointEstimate out;
    out.depth_histogram.assign(std::size_t(cfg.depth_max) + 1, 0);
    KahanSum s1;
    for (const auto& r : res) {
        s1.add(r.value);
        out.depth_histogram[std::size_t(std::min(r.depth, cfg.depth_max))]++;
        if (r.reached_zero) ++out.n_effective;
        if (r.depth_exceeded) ++out.depth_exceeded;
    }
    out.mean = s1.value() / n;
    KahanSum s2;
    for (const auto& r : res) s2.add((r.value - out.mean) * (r.value - out.mean));
    double var = s2.value() / (n - 1);
    out.std_err = std::sqrt(var / n);
    // Re-emission cut at v_max in the continuous model: count the cut mass as error.
    const double defect = pb.model->truncation_defect();
    if (defect > 0) out.std_err = std::hypot(out.std_err, defect * std::abs(out.mean));
    return out;
}

std::vector<PointEstimate> field_scan(const McProblem& pb, double t, const std::vector<Probe>& probes,
                                      const EstimatorConfig& cfg, Exec exec)
{
    if (probes.empty()) throw Error(ErrorCode::InvalidArgument, "probe list is empty");
    std::vector<PointEstimate> out;
    out.reserve(probes.size());
    for (const Probe& p : probes) out.push_back(estimate_f(pb, t, p, cfg, exec));
    return out;
}

} // namespace kslab
