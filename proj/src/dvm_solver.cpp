#include "kslab/dvm_solver.hpp"
#include "kslab/collision.hpp"
#include "kslab/error.hpp"
#include "kslab/parallel.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kslab {

// ---------------------------------------------------------------- propagator

CollisionPropagator::CollisionPropagator(const CorrectedOperator& op, const std::vector<std::size_t>& nodes,
                                         const std::vector<double>& mult)
    : n_(nodes.size())
{
    const VelocityGrid& g = *op.grid;
    L_.assign(n_ * n_, 0.0);
    nu_.resize(n_);
    for (std::size_t a = 0; a < n_; ++a) {
        nu_[a] = op.nu[nodes[a]];
        for (std::size_t b = 0; b < n_; ++b) {
            double v = op.entry(nodes[a], nodes[b]);
            if (mult[b] == 2.0) v += op.entry(nodes[a], g.reflect(nodes[b], 2));
            L_[a * n_ + b] = v;
        }
    }
    // Symmetrise the rounding.
    for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = a + 1; b < n_; ++b) {
            const double m = 0.5 * (L_[a * n_ + b] + L_[b * n_ + a]);
            L_[a * n_ + b] = L_[b * n_ + a] = m;
        }
    V_ = L_;
    lam_.resize(n_);
    const int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', int(n_), V_.data(), int(n_), lam_.data());
    if (info != 0) throw Error(ErrorCode::NonFinite, "eigendecomposition failed, info=" + std::to_string(info));
}

std::vector<double> CollisionPropagator::spectral(const std::function<double(double)>& fn) const
{
    std::vector<double> W(n_ * n_), out(n_ * n_);
    std::vector<double> d(n_);
    for (std::size_t k = 0; k < n_; ++k) d[k] = fn(lam_[k]);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = 0; k < n_; ++k) W[i * n_ + k] = V_[i * n_ + k] * d[k];
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, int(n_), int(n_), int(n_), 1.0, W.data(), int(n_), V_.data(),
                int(n_), 0.0, out.data(), int(n_));
    for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = a + 1; b < n_; ++b) {
            const double m = 0.5 * (out[a * n_ + b] + out[b * n_ + a]);
            out[a * n_ + b] = out[b * n_ + a] = m;
        }
    return out;
}

std::vector<double> CollisionPropagator::exp_matrix(double dt) const
{
    return spectral([dt](double l) { return std::exp(-std::max(l, 0.0) * dt); });
}

std::vector<double> CollisionPropagator::phi1_matrix(double dt) const
{
    return spectral([dt](double l) {
        l = std::max(l, 0.0);
        const double x = l * dt;
        return x < 1e-8 ? dt * (1 - 0.5 * x) : -std::expm1(-x) / l;
    });
}

// ---------------------------------------------------------------- solver

SpatialScheme parse_space_scheme(const std::string& s)
{
    if (s == "upwind") return SpatialScheme::Upwind;
    if (s == "minmod") return SpatialScheme::Minmod;
    throw Error(ErrorCode::ValidationError, "scheme.space must be upwind or minmod");
}

CollisionScheme parse_collision_scheme(const std::string& s)
{
    if (s == "exponential") return CollisionScheme::Exponential;
    if (s == "explicit") return CollisionScheme::Explicit;
    if (s == "semi_implicit") return CollisionScheme::SemiImplicit;
    throw Error(ErrorCode::ValidationError, "scheme.collision must be exponential, explicit or semi_implicit");
}

DvmSolver::DvmSolver(const DvmSetup& s, std::shared_ptr<const CorrectedOperator> op,
                     std::shared_ptr<const GammaOperator> gamma)
    : s_(s), op_(std::move(op)), gamma_(std::move(gamma))
{
    if (s_.nonlinear && !gamma_) throw Error(ErrorCode::InvalidArgument, "nonlinear run needs a Gamma operator");
    s_.wall.validate();
    f_ = DistributionField::make(s_.domain, s_.nx1, s_.nx2, op_->grid, s_.v3_parity);
    const VelocityGrid& g = *op_->grid;
    const std::size_t nv = f_.nv();
    std::vector<std::int64_t> pos(g.size(), -1);
    for (std::size_t k = 0; k < nv; ++k) pos[f_.nodes[k]] = std::int64_t(k);
    for (int a = 0; a < 2; ++a) {
        vel_[a].resize(nv);
        mirror_[a].resize(nv);
        for (std::size_t k = 0; k < nv; ++k) {
            vel_[a][k] = g.node(f_.nodes[k])[a];
            mirror_[a][k] = std::size_t(pos[g.reflect(f_.nodes[k], a)]);
        }
        D_.push_back(DiscreteWall(op_->grid, a, 1).emission_norm());
    }
    sqmu_.resize(nv);
    for (std::size_t k = 0; k < nv; ++k) sqmu_[k] = sqrt_maxwellian(g.node(f_.nodes[k]));
    prop_ = std::make_unique<CollisionPropagator>(*op_, f_.nodes, f_.mult);
    if (s_.collision == CollisionScheme::Exponential) {
        E_ = prop_->exp_matrix(s_.dt);
        P1_ = prop_->phi1_matrix(s_.dt);
    }
}

double DvmSolver::max_transport_dt() const
{
    double vm = 0;
    for (int a = 0; a < 2; ++a)
        for (double v : vel_[a]) vm = std::max(vm, std::abs(v));
    return s_.cfl * std::min(f_.dx1(), f_.dx2()) / vm;
}

void DvmSolver::set_initial(const FieldFunction& f0)
{
    const VelocityGrid& g = *op_->grid;
    for (std::size_t c = 0; c < f_.cells(); ++c) {
        const Vec3 x = f_.center(c);
        double* p = f_.at(c);
        for (std::size_t k = 0; k < f_.nv(); ++k) {
            const Vec3 v = g.node(f_.nodes[k]);
            p[k] = f0(x, v);
            if (f_.mult[k] == 2.0) {
                const double q = f0(x, {v.x, v.y, -v.z});
                if (std::abs(q - p[k]) > 1e-13 * (std::abs(q) + std::abs(p[k])) && std::abs(q - p[k]) > 1e-300)
                    throw Error(ErrorCode::InvalidArgument, "initial data not even in v3; set scheme.v3_parity = false");
            }
        }
    }
    t_ = 0;
    steps_ = 0;
}

void DvmSolver::sweep(int axis, double dt)
{
    if (dt > max_transport_dt() / s_.cfl * (1 + 1e-12))
        throw Error(ErrorCode::CFLViolation, "transport dt " + std::to_string(dt) + " above the CFL limit");
    const int n = axis == 0 ? f_.nx1 : f_.nx2;
    const int lines = axis == 0 ? f_.nx2 : f_.nx1;
    const std::size_t nv = f_.nv();
    const double dx = axis == 0 ? f_.dx1() : f_.dx2();
    const double alpha = s_.wall.alpha(axis == 0 ? Region::Specular : Region::Diffuse);
    const double D = D_[axis];
    const double hw = op_->grid->weight();
    const bool second = s_.scheme == SpatialScheme::Minmod;
    const std::vector<double>& c = vel_[axis];
    const std::vector<std::size_t>& mir = mirror_[axis];
    std::vector<double> cp(nv), cm(nv), a(nv), flux_w(nv);
    for (std::size_t k = 0; k < nv; ++k) {
        cp[k] = std::max(c[k], 0.0);
        cm[k] = std::min(c[k], 0.0);
        a[k] = second ? 0.5 * (1 - std::abs(c[k]) * dt / dx) : 0.0;
        flux_w[k] = f_.mult[k] * sqmu_[k] * std::abs(c[k]) * hw;
    }
    const double lam = dt / dx;

#pragma omp parallel
    {
        std::vector<double> sl(std::size_t(n) * nv, 0.0), F(std::size_t(n + 1) * nv, 0.0), wall(nv);
        std::vector<double*> row(n);
#pragma omp for schedule(static)
        for (int line = 0; line < lines; ++line) {
            for (int i = 0; i < n; ++i) row[i] = f_.at(axis == 0 ? f_.cell(i, line) : f_.cell(line, i));
            if (second)
                for (int i = 1; i + 1 < n; ++i) {
                    double* s = &sl[std::size_t(i) * nv];
                    const double *fm = row[i - 1], *f0 = row[i], *fp = row[i + 1];
                    for (std::size_t k = 0; k < nv; ++k) {
                        const double d1 = fp[k] - f0[k], d0 = f0[k] - fm[k];
                        s[k] = d0 * d1 > 0 ? (std::abs(d0) < std::abs(d1) ? d0 : d1) : 0.0;
                    }
                }
            for (int j = 1; j < n; ++j) {
                double* Fj = &F[std::size_t(j) * nv];
                const double *fl = row[j - 1], *fr = row[j];
                const double *sl_l = &sl[std::size_t(j - 1) * nv], *sl_r = &sl[std::size_t(j) * nv];
                for (std::size_t k = 0; k < nv; ++k)
                    Fj[k] = cp[k] * (fl[k] + a[k] * sl_l[k]) + cm[k] * (fr[k] - a[k] * sl_r[k]);
            }
            // Wall faces: outgoing face value from the wall cell, incoming from the closure.
            for (int side = 0; side < 2; ++side) {
                const double* fw = side == 0 ? row[0] : row[n - 1];
                const double sgn = side == 0 ? -1.0 : 1.0; // outward normal
                KahanSum phi;
                for (std::size_t k = 0; k < nv; ++k)
                    if (sgn * c[k] > 0) phi.add(flux_w[k] * fw[k]);
                const double Phi = phi.value();
                double* Fw = &F[std::size_t(side == 0 ? 0 : n) * nv];
                for (std::size_t k = 0; k < nv; ++k) {
                    if (sgn * c[k] > 0)
                        wall[k] = fw[k];
                    else
                        wall[k] = alpha * D * sqmu_[k] * Phi + (1 - alpha) * fw[mir[k]];
                    Fw[k] = c[k] * wall[k];
                }
            }
            for (int i = 0; i < n; ++i) {
                double* f = row[i];
                const double *Fl = &F[std::size_t(i) * nv], *Fr = &F[std::size_t(i + 1) * nv];
                for (std::size_t k = 0; k < nv; ++k) f[k] -= lam * (Fr[k] - Fl[k]);
            }
        }
    }
}

void DvmSolver::transport(double tau)
{
    if (tau <= 0) return;
    const double lim = max_transport_dt();
    const int m = std::max(1, int(std::ceil(tau / lim - 1e-12)));
    const double dt = tau / m;
    for (int s = 0; s < m; ++s) {
        const int first = s % 2;
        sweep(first, dt);
        sweep(1 - first, dt);
    }
}

void DvmSolver::collide(double dt, std::size_t step_index)
{
    const std::size_t C = f_.cells(), nv = f_.nv();
    const VelocityGrid& g = *op_->grid;
    std::vector<double> S;
    const bool has_source = static_cast<bool>(source_) || static_cast<bool>(step_source_) || s_.nonlinear;
    if (has_source) {
        S.assign(C * nv, 0.0);
        if (source_) {
            const double tm = t_ + 0.5 * dt;
#pragma omp parallel for schedule(static)
            for (std::size_t c = 0; c < C; ++c) {
                const Vec3 x = f_.center(c);
                for (std::size_t k = 0; k < nv; ++k) S[c * nv + k] = source_(tm, x, g.node(f_.nodes[k]));
            }
        }
        if (step_source_) {
            std::vector<double> extra(C * nv, 0.0);
            step_source_(step_index, t_, extra);
            for (std::size_t i = 0; i < S.size(); ++i) S[i] += extra[i];
        }
        if (s_.nonlinear) {
#pragma omp parallel for schedule(dynamic)
            for (std::size_t c = 0; c < C; ++c) {
                const std::vector<double> full = f_.expand(c);
                const std::vector<double> q = gamma_->apply(full, full, Exec::Serial);
                for (std::size_t k = 0; k < nv; ++k) S[c * nv + k] += q[f_.nodes[k]];
            }
        }
    }

    std::vector<double> out(C * nv);
    const int N = int(nv);
    // Fixed row blocks: each block is one single-threaded GEMM, so results do
    // not depend on the thread count.
    constexpr std::size_t kBlock = 64;
    const std::size_t nblocks = (C + kBlock - 1) / kBlock;
    auto blocked = [&](double a, const double* X, const double* B, double beta, double* Y) {
#pragma omp parallel for schedule(static)
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t r0 = b * kBlock, rows = std::min(kBlock, C - r0);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, int(rows), N, N, a, X + r0 * nv, N, B, N, beta,
                        Y + r0 * nv, N);
        }
    };
    switch (s_.collision) {
    case CollisionScheme::Exponential: {
        std::vector<double> Et, Pt;
        const bool cached = dt == s_.dt;
        if (!cached) {
            Et = prop_->exp_matrix(dt);
            Pt = prop_->phi1_matrix(dt);
        }
        const double* E = cached ? E_.data() : Et.data();
        const double* P = cached ? P1_.data() : Pt.data();
        blocked(1.0, f_.data.data(), E, 0.0, out.data());
        if (has_source) blocked(1.0, S.data(), P, 1.0, out.data());
        break;
    }
    case CollisionScheme::Explicit: {
        // f - dt (L f - S)
        out = f_.data;
        blocked(-dt, f_.data.data(), prop_->L().data(), 1.0, out.data());
        if (has_source) cblas_daxpy(int(S.size()), dt, S.data(), 1, out.data(), 1);
        break;
    }
    case CollisionScheme::SemiImplicit: {
        // (f + dt (K f + S)) / (1 + dt nu), K = diag(nu) - L
        std::vector<double> Kf(C * nv);
        blocked(-1.0, f_.data.data(), prop_->L().data(), 0.0, Kf.data());
        const std::vector<double>& nu = prop_->nu();
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t k = 0; k < nv; ++k) {
                const std::size_t i = c * nv + k;
                const double kf = Kf[i] + nu[k] * f_.data[i];
                out[i] = (f_.data[i] + dt * (kf + (has_source ? S[i] : 0.0))) / (1 + dt * nu[k]);
            }
        // The nu-implicit denominator leaks mass; put the per-cell defect back along sqrt(mu).
        double mm = 0;
        for (std::size_t k = 0; k < nv; ++k) mm += f_.mult[k] * sqmu_[k] * sqmu_[k];
        for (std::size_t c = 0; c < C; ++c) {
            KahanSum d;
            for (std::size_t k = 0; k < nv; ++k) {
                const std::size_t i = c * nv + k;
                d.add(f_.mult[k] * sqmu_[k] * (out[i] - f_.data[i] - (has_source ? dt * S[i] : 0.0)));
            }
            const double a = d.value() / mm;
            for (std::size_t k = 0; k < nv; ++k) out[c * nv + k] -= a * sqmu_[k];
        }
        break;
    }
    }
    f_.data.swap(out);
}

void DvmSolver::step()
{
    const double dt = s_.dt;
    if (s_.transport) transport(0.5 * dt);
    if (stage_hook_) stage_hook_(steps_, f_);
    if (s_.collisions) collide(dt, steps_);
    if (s_.transport) transport(0.5 * dt);
    t_ += dt;
    ++steps_;
    check_finite();
}

void DvmSolver::check_finite() const
{
    for (std::size_t i = 0; i < f_.data.size(); ++i)
        if (!std::isfinite(f_.data[i])) {
            const std::size_t c = i / f_.nv(), k = i % f_.nv();
            throw Error(ErrorCode::NonFinite, "non-finite value at cell " + std::to_string(c) + ", velocity node " +
                                                  std::to_string(f_.nodes[k]) + ", t=" + std::to_string(t_));
        }
}

double DvmSolver::mass() const
{
    KahanSum s;
    const double w = op_->grid->weight() * f_.cell_area();
    for (std::size_t c = 0; c < f_.cells(); ++c) {
        const double* p = f_.at(c);
        double acc = 0;
        for (std::size_t k = 0; k < f_.nv(); ++k) acc += f_.mult[k] * sqmu_[k] * p[k];
        s.add(acc * w);
    }
    return s.value();
}

// ---------------------------------------------------------------- runs

FieldFunction initial_data(const RunConfig& c)
{
    const double eps = c.initial_eps, L = c.L, H = c.H;
    if (c.initial_kind == "zero") return [](const Vec3&, const Vec3&) { return 0.0; };
    if (c.initial_kind == "cos_chi") {
        const int m = c.initial_chi;
        return [eps, H, m](const Vec3& x, const Vec3& v) { return eps * std::cos(M_PI * x.y / H) * chi(m, v); };
    }
    return [eps, L, H](const Vec3& x, const Vec3& v) {
        return eps * sqrt_maxwellian(v) *
               (1 + 0.5 * std::sin(M_PI * x.x / (2 * L)) * v.x + 0.5 * std::cos(M_PI * x.y / H) * (1 + v.y) +
                0.25 * (norm2(v) - 3) * std::cos(M_PI * x.x / L));
    };
}

TimeFieldFunction source_term(const RunConfig& c)
{
    if (c.source_kind == "none") return {};
    const double amp = c.source_amp, L = c.L, H = c.H;
    return [amp, L, H](double, const Vec3& x, const Vec3& v) {
        return amp * sqrt_maxwellian(v) * std::cos(M_PI * x.y / H) * (v.x * v.x - 1) *
               (1 + 0.5 * std::sin(M_PI * x.x / (2 * L)));
    };
}

DvmSetup setup_from_config(const RunConfig& c)
{
    if (c.domain_kind != DomainKind::Rect2D)
        throw Error(ErrorCode::ValidationError, "domain.kind must be rect for the deterministic solver");
    DvmSetup s;
    s.domain = c.domain();
    s.nx1 = c.nx1;
    s.nx2 = c.nx2;
    s.wall = c.wall;
    s.dt = c.dt;
    s.cfl = c.cfl;
    s.scheme = parse_space_scheme(c.space_scheme);
    s.collision = parse_collision_scheme(c.collision_scheme);
    s.nonlinear = c.nonlinear;
    s.v3_parity = c.v3_parity;
    return s;
}

std::shared_ptr<const CorrectedOperator> build_operator(const RunConfig& c)
{
    auto grid = std::make_shared<const VelocityGrid>(c.velocity_n, c.velocity_vmax);
    KernelTableOptions ko;
    ko.theta = c.theta;
    const KernelTable table = KernelTable::build(grid, ko);
    return std::make_shared<const CorrectedOperator>(correct_operator(table));
}

namespace {

double abs_mass(const DistributionField& f)
{
    KahanSum s;
    const double w = f.grid->weight() * f.cell_area();
    for (std::size_t c = 0; c < f.cells(); ++c) {
        const double* p = f.at(c);
        for (std::size_t k = 0; k < f.nv(); ++k) s.add(f.mult[k] * sqrt_maxwellian(f.grid->node(f.nodes[k])) * std::abs(p[k]) * w);
    }
    return s.value();
}

std::size_t steps_for(double T, double dt)
{
    const double r = T / dt;
    const std::size_t n = std::size_t(std::llround(r));
    if (std::abs(r - double(n)) > 1e-9 * std::max(1.0, r))
        throw Error(ErrorCode::ValidationError, "t_end must be a multiple of time.dt");
    return std::max<std::size_t>(n, 1);
}

} // namespace

RunResult run_dvm(const RunConfig& c, const RunOptions& opt)
{
    const auto t_start = std::chrono::steady_clock::now();
    c.validate();
    const DvmSetup s = setup_from_config(c);
    auto op = opt.op ? opt.op : build_operator(c);
    std::shared_ptr<const GammaOperator> gamma = opt.gamma;
    if (c.nonlinear && !gamma) gamma = std::make_shared<const GammaOperator>(op->grid);
    DvmSolver solver(s, op, gamma);
    solver.set_initial(initial_data(c));
    if (auto g = source_term(c)) solver.set_source(g);

    RunResult r;
    r.correction = op->correction;
    r.asymmetry = op->asymmetry;
    r.truncation_defect = op->grid->truncation_defect();
    r.mass0 = solver.mass();
    r.mass_scale = abs_mass(solver.field());
    const std::size_t nsteps = steps_for(c.t_end, c.dt);
    const std::size_t every = std::max<std::size_t>(1, std::size_t(std::llround(c.output_every / c.dt)));

    auto record = [&]() {
        r.rows.push_back({solver.time(), weighted_norms(solver.field(), c.theta)});
        if (opt.keep_snapshots) r.snapshots.push_back({solver.time(), solver.field()});
    };
    record();
    for (std::size_t n = 1; n <= nsteps; ++n) {
        solver.step();
        if (r.mass_scale > 0)
            r.max_mass_drift = std::max(r.max_mass_drift, std::abs(solver.mass() - r.mass0) / r.mass_scale);
        if (n % every == 0 || n == nsteps) record();
    }
    r.final_field = solver.field();

    std::vector<double> t, l2, li, bd;
    for (const auto& row : r.rows) {
        t.push_back(row.t);
        l2.push_back(row.n.l2);
        li.push_back(row.n.linf_w);
        bd.push_back(row.n.bdry_2plus);
    }
    try {
        r.fit_l2 = fit_decay(t, l2, c.fit_lo * c.t_end, c.fit_hi * c.t_end, "l2");
        r.fit_linf = fit_decay(t, li, c.fit_lo * c.t_end, c.fit_hi * c.t_end, "linf_w");
        r.fit_bdry = fit_decay(t, bd, c.fit_lo * c.t_end, c.fit_hi * c.t_end, "bdry_2plus");
        r.fit_ok = true;
    } catch (const Error& e) {
        r.fit_error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return r;
}

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows)
{
    std::string out = "t,l2,linf_w,norm_a,norm_b,norm_c,norm_IP_nu,bdry_2plus,mass\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.n.l2,
                      r.n.linf_w, r.n.norm_a, r.n.norm_b, r.n.norm_c, r.n.norm_IP_nu, r.n.bdry_2plus, r.n.mass);
        out += buf;
    }
    return out;
}

namespace {
constexpr char kMagic[8] = {'K', 'S', 'L', 'A', 'B', 'F', '6', '4'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void write_field_binary(const std::string& path, const DistributionField& f)
{
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error(ErrorCode::IOError, "cannot write " + path);
    o.write(kMagic, 8);
    const std::uint32_t hdr[5] = {kVersion, std::uint32_t(f.nx1), std::uint32_t(f.nx2), std::uint32_t(f.grid->n()),
                                  std::uint32_t(f.nv())};
    o.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    const double vm = f.grid->v_max();
    o.write(reinterpret_cast<const char*>(&vm), sizeof vm);
    for (std::size_t k = 0; k < f.nv(); ++k) {
        const std::uint64_t idx = f.nodes[k];
        o.write(reinterpret_cast<const char*>(&idx), sizeof idx);
    }
    o.write(reinterpret_cast<const char*>(f.data.data()), std::streamsize(f.data.size() * sizeof(double)));
    if (!o) throw Error(ErrorCode::IOError, "write failed for " + path);
}

DistributionField read_field_binary(const std::string& path, const Domain& d)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IOError, "cannot read " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorCode::IOError, path + ": bad magic");
    std::uint32_t hdr[5];
    in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    if (hdr[0] != kVersion) throw Error(ErrorCode::IOError, path + ": unsupported version");
    double vm;
    in.read(reinterpret_cast<char*>(&vm), sizeof vm);
    auto grid = std::make_shared<const VelocityGrid>(int(hdr[3]), vm);
    DistributionField f = DistributionField::make(d, int(hdr[1]), int(hdr[2]), grid, false);
    f.nodes.resize(hdr[4]);
    f.mult.assign(hdr[4], 1.0);
    for (std::size_t k = 0; k < hdr[4]; ++k) {
        std::uint64_t idx;
        in.read(reinterpret_cast<char*>(&idx), sizeof idx);
        f.nodes[k] = std::size_t(idx);
        if (hdr[4] != grid->size()) f.mult[k] = 2.0;
    }
    f.data.resize(f.cells() * f.nv());
    in.read(reinterpret_cast<char*>(f.data.data()), std::streamsize(f.data.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::IOError, path + ": truncated payload");
    return f;
}

PicardResult picard_iterate(const RunConfig& c0, int n_iters, const RunOptions& opt)
{
    RunConfig c = c0;
    c.validate();
    c.nonlinear = false;
    DvmSetup s = setup_from_config(c);
    auto op = opt.op ? opt.op : build_operator(c);
    auto gamma = opt.gamma ? opt.gamma : std::make_shared<const GammaOperator>(op->grid);
    const std::size_t nsteps = steps_for(c.t_end, c.dt);
    const FieldFunction f0 = initial_data(c);
    const TimeFieldFunction g = source_term(c);

    PicardResult res;
    std::vector<std::vector<double>> prev; // stage states of the previous iterate (empty: f = 0)
    int growth = 0;
    for (int it = 0; it < n_iters; ++it) {
        DvmSolver solver(s, op, gamma);
        solver.set_initial(f0);
        if (g) solver.set_source(g);
        const DistributionField& F = solver.field();
        const std::size_t C = F.cells(), nv = F.nv();
        if (!prev.empty())
            solver.set_step_source([&](std::size_t step, double, std::vector<double>& out) {
                const std::vector<double>& st = prev[step];
#pragma omp parallel for schedule(dynamic)
                for (std::size_t cell = 0; cell < C; ++cell) {
                    std::vector<double> full(F.grid->size(), 0.0);
                    for (std::size_t k = 0; k < nv; ++k) {
                        full[F.nodes[k]] = st[cell * nv + k];
                        if (F.mult[k] == 2.0) full[F.grid->reflect(F.nodes[k], 2)] = st[cell * nv + k];
                    }
                    const std::vector<double> q = gamma->apply(full, full, Exec::Serial);
                    for (std::size_t k = 0; k < nv; ++k) out[cell * nv + k] = q[F.nodes[k]];
                }
            });
        std::vector<std::vector<double>> cur;
        cur.reserve(nsteps);
        solver.set_stage_hook([&](std::size_t, const DistributionField& f) { cur.push_back(f.data); });
        for (std::size_t n = 0; n < nsteps; ++n) solver.step();

        std::vector<double> wt(nv);
        for (std::size_t k = 0; k < nv; ++k) wt[k] = velocity_weight(F.grid->node(F.nodes[k]), c.theta);
        double d = 0;
        for (std::size_t n = 0; n < nsteps; ++n)
            for (std::size_t i = 0; i < cur[n].size(); ++i) {
                const double pv = prev.empty() ? 0.0 : prev[n][i];
                d = std::max(d, wt[i % nv] * std::abs(cur[n][i] - pv));
            }
        if (!res.distances.empty()) {
            res.ratios.push_back(res.distances.back() > 0 ? d / res.distances.back() : 0.0);
            growth = d > res.distances.back() ? growth + 1 : 0;
        }
        res.distances.push_back(d);
        res.finals.push_back(solver.field());
        prev = std::move(cur);
        if (growth >= 3) throw Error(ErrorCode::DivergenceDetected, "Picard distances grew 3 times in a row");
        if (d == 0 && it > 0) break;
    }
    res.limit = res.finals.back();
    return res;
}

} // namespace kslab
