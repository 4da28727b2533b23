#include "kinpot/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "kinpot/errors.hpp"
#include "kinpot/parallel.hpp"

namespace kinpot {

namespace {

std::string fmt(double x) {
    std::ostringstream o;
    o << x;
    return o.str();
}

PotentialField build_potential(const ScenarioConfig& c) {
    PotentialField p(c.grid.d_x, c.potential.modes, c.potential.shift);
    return c.potential.auto_shift ? normalize_nonnegative(p) : p;
}

const ScenarioConfig& checked(const ScenarioConfig& c) {
    auto p = c.problems();
    if (!p.empty()) throw ConfigError(std::move(p));
    return c;
}

std::size_t nearest_zero_velocity(const PhaseGrid& g) {
    std::size_t best = 0;
    for (std::size_t iv = 1; iv < g.n_v_cells(); ++iv)
        if (norm2(g.v_nodes()[iv]) < norm2(g.v_nodes()[best])) best = iv;
    return best;
}

// Gaussian elimination with partial pivoting for the small moment systems.
std::vector<double> solve_small(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        if (A[p][c] == 0.0) throw ContractError("singular moment system");
        std::swap(A[p], A[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            double m = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
            b[r] -= m * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

// Collision invariants adapted to the potential: 1, |v|^2/2 + Phi, degenerate v_i.
std::size_t basis_size(const SolverContext& ctx) { return 2 + ctx.degenerate.indices.size(); }

void basis_at(const SolverContext& ctx, std::size_t ix, std::size_t iv, double* psi) {
    const Vec& v = ctx.grid.v_nodes()[iv];
    psi[0] = 1.0;
    psi[1] = 0.5 * norm2(v) + ctx.tables.phi_x[ix];
    for (std::size_t k = 0; k < ctx.degenerate.indices.size(); ++k) psi[2 + k] = v[ctx.degenerate.indices[k]];
}

// Coefficients c with sum_n q_n psi_k(n) sum_l c_l psi_l(n) = rhs_k, q_n = quad weight * mu_E.
std::vector<double> moment_coefficients(const SolverContext& ctx, const std::vector<double>& rhs) {
    const auto& g = ctx.grid;
    const std::size_t K = basis_size(ctx);
    std::vector<std::vector<double>> G(K, std::vector<double>(K, 0.0));
    std::vector<double> psi(K);
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            basis_at(ctx, ix, iv, psi.data());
            double q = g.x_weight() * g.v_weight(iv) * ctx.tables.mu_E[g.index(ix, iv)];
            for (std::size_t a = 0; a < K; ++a)
                for (std::size_t b = 0; b < K; ++b) G[a][b] += q * psi[a] * psi[b];
        }
    return solve_small(std::move(G), rhs);
}

std::vector<double> moment_vector(const ConservedQuantities& q) {
    std::vector<double> m{q.mass, q.energy};
    m.insert(m.end(), q.momentum.begin(), q.momentum.end());
    return m;
}

double floor_density(const PhaseGrid& g, std::vector<double>& F) {
    double removed = 0.0;
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            double& y = F[g.index(ix, iv)];
            if (y < 0.0) {
                removed -= y * g.v_weight(iv);
                y = 0.0;
            }
        }
    return removed * g.x_weight();
}

double read_or(const PhaseGrid& g, const std::vector<double>& values, const Stencil& s, double outside) {
    return s.outside_v ? outside : apply_stencil(g, values.data(), s);
}

// R(F)/(e^{-Phi} nu) at nodes, with F floored at zero.
std::vector<double> rate_ratio(const SolverContext& ctx, const std::vector<double>& F) {
    const auto& g = ctx.grid;
    DistributionField Fp(g, F, FieldKind::F);
    for (auto& y : Fp.values) y = std::max(y, 0.0);
    auto R = loss_rate_grid(Fp, ctx.op);
    const std::size_t NV = g.n_v_cells();
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix) {
        double e = std::exp(-ctx.tables.phi_x[ix]);
        for (std::size_t iv = 0; iv < NV; ++iv) R[ix * NV + iv] /= e * ctx.op.nu()[iv];
    }
    return R;
}

// Source grids w [e^{-Phi} K f + e^{-Phi/2} Gamma_+(f,f)] for several h levels,
// with one batched gain evaluation over all x-cells and levels.
std::vector<std::vector<double>> sources(const SolverContext& ctx, const std::vector<const std::vector<double>*>& hs) {
    const auto& g = ctx.grid;
    const std::size_t NX = g.n_x_cells(), NV = g.n_v_cells(), L = hs.size();
    const std::size_t batch = NX * L;
    const auto& K = ctx.op.K_matrix();
    std::vector<double> inv_sqrt_mu(NV);
    for (std::size_t iv = 0; iv < NV; ++iv) inv_sqrt_mu[iv] = std::exp(0.25 * norm2(g.v_nodes()[iv]));

    std::vector<std::vector<double>> S(L, std::vector<double>(g.size(), 0.0));
    std::vector<double> r(NV * batch), gain(NV * batch);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t ix = 0; ix < NX; ++ix)
            for (std::size_t iv = 0; iv < NV; ++iv) {
                std::size_t n = ix * NV + iv;
                r[iv * batch + l * NX + ix] = (*hs[l])[n] / ctx.tables.w[n] * inv_sqrt_mu[iv];
            }
    ctx.op.gamma_gain_batch(r.data(), batch, gain.data());

    parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
        std::vector<double> f(NV);
        for (std::size_t b = b0; b < b1; ++b) {
            std::size_t l = b / NX, ix = b % NX;
            const std::vector<double>& h = *hs[l];
            for (std::size_t iv = 0; iv < NV; ++iv) f[iv] = h[ix * NV + iv] / ctx.tables.w[ix * NV + iv];
            double e = std::exp(-ctx.tables.phi_x[ix]), e2 = std::exp(-0.5 * ctx.tables.phi_x[ix]);
            for (std::size_t iv = 0; iv < NV; ++iv) {
                const double* row = K.data() + iv * NV;
                double kf = 0.0;
                for (std::size_t j = 0; j < NV; ++j) kf += row[j] * f[j];
                std::size_t n = ix * NV + iv;
                S[l][n] = ctx.tables.w[n] * (e * kf + e2 * gain[iv * batch + b]);
            }
        }
    });
    return S;
}

bool exponential_rule(const SolverContext& ctx) { return ctx.config.solver.source_quadrature == "exponential"; }

std::vector<double> F_from_h(const SolverContext& ctx, const std::vector<double>& h) {
    std::vector<double> F(h.size());
    for (std::size_t n = 0; n < h.size(); ++n)
        F[n] = ctx.tables.mu_E[n] + ctx.tables.sqrt_mu_E[n] * h[n] / ctx.tables.w[n];
    return F;
}

[[noreturn]] void report_blowup(const SolverContext& ctx, double t, std::size_t n) {
    std::size_t NV = ctx.grid.n_v_cells();
    throw BlowupError("non-finite value at t = " + fmt(t) + " in x-cell " + std::to_string(n / NV) + ", v-cell " +
                      std::to_string(n % NV));
}

}  // namespace

std::vector<std::string> ScenarioConfig::problems() const {
    std::vector<std::string> p;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) p.push_back(msg);
    };
    need(dt > 0.0, "dt must be positive");
    need(T >= 0.0, "T must be nonnegative");
    need(substep > 0.0, "substep must be positive");
    need(diag_every >= 1, "diag_every must be at least 1");
    need(snapshot_every >= 0, "snapshot_every must be nonnegative");
    need(beta >= 4.0, "beta must satisfy beta >= 4 (smaller weights do not control the collision gain), got " + fmt(beta));

    need(grid.d_x >= 1 && grid.d_x <= 3, "grid.d_x must be 1, 2 or 3");
    need(grid.d_v >= 2 && grid.d_v <= 3, "grid.d_v must be 2 or 3");
    need(grid.d_x <= grid.d_v, "grid.d_x must not exceed grid.d_v");
    need(grid.nx >= 4, "grid.nx must be at least 4");
    need(grid.nv >= 8, "grid.nv must be at least 8");
    need(grid.v_max > 0.0, "grid.v_max must be positive");
    need(grid.tail_tol > 0.0, "grid.tail_tol must be positive");
    if (grid.d_v >= 2 && grid.d_v <= 3 && grid.v_max > 0.0 && grid.tail_tol > 0.0)
        need(maxwellian_tail_mass(grid.d_v, grid.v_max) <= grid.tail_tol,
             "grid.v_max too small: Maxwellian tail mass " + fmt(maxwellian_tail_mass(grid.d_v, grid.v_max)) +
                 " exceeds grid.tail_tol");

    need(kernel.gamma >= 0.0 && kernel.gamma <= 1.0, "kernel.gamma must lie in [0, 1], got " + fmt(kernel.gamma));
    need(kernel.c_b > 0.0, "kernel.c_b must be positive");
    need(kernel.angular_exponent >= 1.0, "kernel.angular_exponent must be at least 1 (cutoff b <= C|cos|)");
    need(kernel.n_angle >= 2, "kernel.n_angle must be at least 2");
    need(kernel.n_azimuth >= 1, "kernel.n_azimuth must be at least 1");
    need(kernel.eps_reg > 0.0, "kernel.eps_reg must be positive");

    for (std::size_t i = 0; i < potential.modes.size(); ++i)
        for (int a = grid.d_x; a < 3; ++a)
            need(potential.modes[i].k[a] == 0,
                 "potential.modes[" + std::to_string(i) + "] has a wave-vector component beyond grid.d_x");

    const auto& d = initial_data;
    need(d.family == "localized-bump" || d.family == "high-frequency" || d.family == "small-smooth" ||
             d.family == "equilibrium",
         "initial_data.family must be one of localized-bump, high-frequency, small-smooth, equilibrium");
    need(d.amplitude >= 0.0, "initial_data.amplitude must be nonnegative");
    need(d.x_radius > 0.0 && d.x_radius <= 0.5, "initial_data.x_radius must lie in (0, 0.5]");
    need(d.v_radius > 0.0, "initial_data.v_radius must be positive");
    need(d.v_width > 0.0, "initial_data.v_width must be positive");
    need(d.mode >= 1, "initial_data.mode must be at least 1");
    need(d.noise >= 0.0, "initial_data.noise must be nonnegative");

    const auto& t = thresholds;
    need(t.C1 >= 1.0, "thresholds.C1 must be at least 1");
    need(t.C_tilde1 > 0.0, "thresholds.C_tilde1 must be positive");
    need(t.C_tilde2 >= 1.0, "thresholds.C_tilde2 must be at least 1");
    need(t.delta_star >= 0.0, "thresholds.delta_star must be nonnegative");
    need(t.tol_pos >= 0.0, "thresholds.tol_pos must be nonnegative");
    need(t.tol_bound >= 0.0, "thresholds.tol_bound must be nonnegative");
    need(t.closure_delta > 0.0, "thresholds.closure_delta must be positive");

    need(picard.C > 0.0, "picard.C must be positive");
    need(picard.tol > 0.0, "picard.tol must be positive");
    need(picard.max_iter >= 1, "picard.max_iter must be at least 1");

    need(solver.loss == "nonlinear" || solver.loss == "linear", "solver.loss must be nonlinear or linear");
    need(solver.source_quadrature == "exponential" || solver.source_quadrature == "trapezoid",
         "solver.source_quadrature must be exponential or trapezoid");
    return p;
}

SolverContext::SolverContext(const ScenarioConfig& cfg)
    : config(checked(cfg)),
      phi(build_potential(cfg)),
      grid(cfg.grid.d_x, cfg.grid.d_v, cfg.grid.nx, cfg.grid.nv, cfg.grid.v_max, cfg.grid.tail_tol),
      weight{cfg.beta},
      tables(node_tables(grid, phi, weight)),
      degenerate(degenerate_directions(phi, cfg.grid.d_v)),
      op(grid, cfg.kernel),
      reference_node(nearest_zero_velocity(grid)) {
    if (!cfg.potential.auto_shift && estimate_minimum(phi).value < -1e-12)
        throw ConfigError({"potential is negative somewhere; enable potential.auto_shift or raise potential.shift"});
}

SolverState make_state(const SolverContext& ctx, const DistributionField& F, double t) {
    SolverState s;
    s.t = t;
    s.F = F;
    s.f = DistributionField(F.grid, FieldKind::f);
    s.h = DistributionField(F.grid, FieldKind::h);
    for (std::size_t n = 0; n < F.values.size(); ++n) {
        double f = (F.values[n] - ctx.tables.mu_E[n]) / ctx.tables.sqrt_mu_E[n];
        s.f.values[n] = f;
        s.h.values[n] = ctx.tables.w[n] * f;
    }
    return s;
}

double loss_rate_R(const CollisionOperator& op, const DistributionField& F, std::size_t x_cell, const Vec& v) {
    if (F.kind != FieldKind::F) throw ContractError("loss rate needs a density field");
    double r = op.loss_sum(F.values.data() + x_cell * F.grid.n_v_cells(), v);
    if (r < 0.0) throw ContractError("negative loss rate: density input is negative");
    return r;
}

double damping_factor_I(const Trajectory& traj, const RateFn& rate) { return std::exp(-loss_integral(traj, rate)); }

RateFn history_rate(const SolverContext& ctx, std::function<const DistributionField&(double)> history) {
    return [&ctx, history](double s, const Vec& X, const Vec& V) {
        const DistributionField& F = history(s);
        const auto& g = ctx.grid;
        const std::size_t NV = g.n_v_cells();
        auto st = make_stencil(g, X, V);
        std::vector<double> slice(NV, 0.0);
        const int corners = 1 << g.d_x();
        for (int m = 0; m < corners; ++m) {
            double w = 1.0;
            std::size_t ix = 0;
            for (int a = 0; a < g.d_x(); ++a) {
                bool hi = (m >> a) & 1;
                w *= hi ? st.x_frac[a] : 1.0 - st.x_frac[a];
                ix = ix * g.nx() + (hi ? st.x_hi[a] : st.x_lo[a]);
            }
            if (w == 0.0) continue;
            for (std::size_t iv = 0; iv < NV; ++iv) slice[iv] += w * F.at(ix, iv) / ctx.tables.mu_E[g.index(ix, iv)];
        }
        for (std::size_t iv = 0; iv < NV; ++iv) slice[iv] *= ctx.tables.mu_v[iv];
        return std::exp(-ctx.phi.evaluate(X)) * ctx.op.loss_sum(slice.data(), V);
    };
}

DistributionField initial_density(const SolverContext& ctx, double* floored_mass) {
    const auto& g = ctx.grid;
    const auto& d = ctx.config.initial_data;
    const std::size_t NV = g.n_v_cells();
    std::vector<double> shape(g.size(), 0.0);
    auto cos_bump = [](double s) {
        if (s >= 1.0) return 0.0;
        double c = std::cos(0.5 * std::numbers::pi * s);
        return c * c;
    };
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix) {
        Vec x = g.x_node(ix);
        for (std::size_t iv = 0; iv < NV; ++iv) {
            const Vec& v = g.v_nodes()[iv];
            double dv2 = norm2(v - d.v_center);
            double gauss = std::exp(-0.5 * dv2 / (d.v_width * d.v_width));
            double y = 0.0;
            if (d.family == "localized-bump") {
                double dx2 = 0.0;
                for (int a = 0; a < g.d_x(); ++a) {
                    double t = x[a] - d.x_center[a];
                    t -= std::nearbyint(t);
                    dx2 += t * t;
                }
                y = cos_bump(std::sqrt(dx2) / d.x_radius) * cos_bump(std::sqrt(dv2) / d.v_radius);
            } else if (d.family == "high-frequency") {
                y = std::cos(two_pi * d.mode * x[0]) * gauss;
            } else if (d.family == "small-smooth") {
                double s = 0.0;
                for (int a = 0; a < g.d_x(); ++a) s += x[a];
                y = std::sin(two_pi * s) * gauss;
            }
            shape[g.index(ix, iv)] = y;
        }
    }
    if (d.noise > 0.0 && d.family != "equilibrium") {
        std::mt19937_64 rng(ctx.config.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (auto& y : shape) y += d.noise * U(rng);
    }

    // Work with f = h / w, remove the invariant components, rescale h to the amplitude.
    std::vector<double> f(g.size());
    for (std::size_t n = 0; n < f.size(); ++n) f[n] = shape[n] / ctx.tables.w[n];
    if (d.zero_moments && d.family != "equilibrium") {
        const std::size_t K = basis_size(ctx);
        std::vector<double> rhs(K, 0.0), psi(K);
        for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
            for (std::size_t iv = 0; iv < NV; ++iv) {
                std::size_t n = g.index(ix, iv);
                basis_at(ctx, ix, iv, psi.data());
                double q = g.x_weight() * g.v_weight(iv) * ctx.tables.sqrt_mu_E[n] * f[n];
                for (std::size_t k = 0; k < K; ++k) rhs[k] += q * psi[k];
            }
        auto c = moment_coefficients(ctx, rhs);
        for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
            for (std::size_t iv = 0; iv < NV; ++iv) {
                std::size_t n = g.index(ix, iv);
                basis_at(ctx, ix, iv, psi.data());
                double s = 0.0;
                for (std::size_t k = 0; k < K; ++k) s += c[k] * psi[k];
                f[n] -= s * ctx.tables.sqrt_mu_E[n];
            }
    }
    double sup = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) sup = std::max(sup, std::abs(ctx.tables.w[n] * f[n]));
    double scale = sup > 0.0 ? d.amplitude / sup : 0.0;
    DistributionField F(g, FieldKind::F);
    for (std::size_t n = 0; n < f.size(); ++n) F.values[n] = ctx.tables.mu_E[n] + ctx.tables.sqrt_mu_E[n] * scale * f[n];
    double removed = floor_density(g, F.values);
    if (floored_mass) *floored_mass = removed;
    return F;
}

double restore_moments(const SolverContext& ctx, DistributionField& F, const ConservedQuantities& target) {
    const auto& g = ctx.grid;
    auto q = conserved_quantities(F, ctx.phi, ctx.degenerate);
    auto want = moment_vector(target), have = moment_vector(q);
    std::vector<double> rhs(want.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = want[k] - have[k];
    auto c = moment_coefficients(ctx, rhs);
    std::vector<double> psi(c.size());
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            basis_at(ctx, ix, iv, psi.data());
            double s = 0.0;
            for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * psi[k];
            F.values[g.index(ix, iv)] += s * ctx.tables.mu_E[g.index(ix, iv)];
        }
    return floor_density(g, F.values);
}

void exponential_weights(double g, double& wa, double& wb) {
    if (g < 0.1) {
        // Series of int_0^1 e^{-g u} u du and int_0^1 e^{-g u} (1-u) du.
        double term = 1.0;  // (-g)^k / k!
        wa = wb = 0.0;
        for (int k = 0; k < 12; ++k) {
            wa += term / (k + 2);
            wb += term / ((k + 1.0) * (k + 2.0));
            term *= -g / (k + 1);
        }
        return;
    }
    double e = std::exp(-g);
    wa = (1.0 - (1.0 + g) * e) / (g * g);
    wb = (g - 1.0 + e) / (g * g);
}

// ---------------------------------------------------------------------------
// Semi-Lagrangian marcher

SemiLagrangian::SemiLagrangian(const SolverContext& ctx, double dt) : ctx_(ctx), dt_(dt) {
    if (!(dt > 0.0)) throw ContractError("time step must be positive");
    const auto& g = ctx.grid;
    const int nsub = substep_count(dt, ctx.config.substep);
    stride_ = static_cast<std::size_t>(nsub) + 1;
    ds_ = dt / nsub;
    const std::size_t N = g.size(), NV = g.n_v_cells();
    foot_.resize(N);
    path_.resize(N * stride_);
    path_rate_.resize(N * stride_);
    const int dim = g.d_v();
    parallel_for(N, [&](std::size_t n0, std::size_t n1) {
        for (std::size_t n = n0; n < n1; ++n) {
            std::size_t ix = n / NV, iv = n % NV;
            auto tr = backtrace(ctx.phi, dim, dt, g.x_node(ix), g.v_node(iv), 0.0, ctx.config.substep);
            for (std::size_t k = 0; k < stride_; ++k) {
                const auto& p = tr.states[k];
                path_[n * stride_ + k] = make_stencil(g, p.x, p.v);
                double nu = k == 0 ? ctx.op.nu()[iv] : ctx.op.nu_at(p.v);
                double ph = k == 0 ? ctx.tables.phi_x[ix] : ctx.phi.evaluate(p.x);
                path_rate_[n * stride_ + k] = std::exp(-ph) * nu;
            }
            foot_[n] = path_[n * stride_ + stride_ - 1];
        }
    });
}

std::vector<double> SemiLagrangian::rate_ratio_grid(const SolverState& s) const { return rate_ratio(ctx_, s.F.values); }

std::vector<double> SemiLagrangian::source_grid(const SolverState& s) const {
    return std::move(sources(ctx_, {&s.h.values})[0]);
}

SolverState SemiLagrangian::step(const SolverState& s) const {
    const auto& g = ctx_.grid;
    const auto& opt = ctx_.config.solver;
    const std::size_t N = g.size();
    std::vector<double> rho, S;
    if (opt.loss == "nonlinear") rho = rate_ratio_grid(s);
    if (opt.sources) S = source_grid(s);
    const bool expo = exponential_rule(ctx_);
    std::vector<double> hn(N), damp(N);
    parallel_for(N, [&](std::size_t n0, std::size_t n1) {
        for (std::size_t n = n0; n < n1; ++n) {
            const Stencil* p = path_.data() + n * stride_;
            const double* pr = path_rate_.data() + n * stride_;
            double sum = 0.0, ends = 0.0;
            for (std::size_t k = 0; k < stride_; ++k) {
                double r = pr[k] * (rho.empty() ? 1.0 : read_or(g, rho, p[k], 1.0));
                sum += r;
                if (k == 0 || k + 1 == stride_) ends += r;
            }
            double G = ds_ * (sum - 0.5 * ends);
            double E = std::exp(-G);
            const Stencil& ft = foot_[n];
            double val = E * read_or(g, s.h.values, ft, 0.0);
            if (!S.empty()) {
                double sf = read_or(g, S, ft, 0.0), sn = S[n];
                if (expo) {
                    double wa, wb;
                    exponential_weights(G, wa, wb);
                    val += dt_ * (wa * sf + wb * sn);
                } else {
                    val += 0.5 * dt_ * (E * sf + sn);
                }
            }
            hn[n] = val;
            damp[n] = E;
        }
    });
    for (std::size_t n = 0; n < N; ++n)
        if (!std::isfinite(hn[n])) report_blowup(ctx_, s.t + dt_, n);

    DistributionField F(g, F_from_h(ctx_, hn), FieldKind::F);
    double floored = opt.conservative_correction
                         ? restore_moments(ctx_, F, conserved_quantities(s.F, ctx_.phi, ctx_.degenerate))
                         : floor_density(g, F.values);
    SolverState out = make_state(ctx_, F, s.t + dt_);
    out.step = s.step + 1;
    out.floored_mass = floored;
    out.damping_sample = damp[ctx_.reference_node];
    return out;
}

SolverState step_semi_lagrangian(const SolverContext& ctx, const SolverState& s, double dt) {
    return SemiLagrangian(ctx, dt).step(s);
}

// ---------------------------------------------------------------------------
// Picard iteration

PicardResult local_picard_solve(const SolverContext& ctx, const DistributionField& F0, double horizon) {
    const auto& g = ctx.grid;
    const auto& cfg = ctx.config;
    F0.validate(cfg.thresholds.tol_pos);
    auto st0 = make_state(ctx, F0, 0.0);
    PicardResult res;
    auto& rep = res.report;
    rep.C = cfg.picard.C;
    rep.h0_sup = norm_weighted_linf(st0.h);
    rep.T0 = picard_time(rep.C, rep.h0_sup);
    const double Tend = std::min(rep.T0, horizon);
    if (!(Tend > 0.0)) throw ContractError("Picard interval must have positive length");
    const int J = std::max(1, static_cast<int>(std::ceil(Tend / cfg.dt - 1e-9)));
    const double dtau = Tend / J;
    rep.levels = J;
    rep.dtau = dtau;

    // Ladder feet: Y_k = X(t_j - k dtau; t_j, x, v) for every j by time-translation invariance.
    const std::size_t N = g.size(), NV = g.n_v_cells(), L = J + 1;
    std::vector<Stencil> Y(N * L);
    std::vector<double> gY(N * L);
    const int dim = g.d_v();
    parallel_for(N, [&](std::size_t n0, std::size_t n1) {
        for (std::size_t n = n0; n < n1; ++n) {
            std::size_t ix = n / NV, iv = n % NV;
            PhasePoint p{g.x_node(ix), g.v_node(iv)};
            for (std::size_t k = 0; k < L; ++k) {
                if (k > 0) p = backtrace_endpoint(ctx.phi, dim, dtau, p.x, p.v, cfg.substep);
                Y[n * L + k] = make_stencil(g, p.x, p.v);
                double nu = k == 0 ? ctx.op.nu()[iv] : ctx.op.nu_at(p.v);
                double ph = k == 0 ? ctx.tables.phi_x[ix] : ctx.phi.evaluate(p.x);
                gY[n * L + k] = std::exp(-ph) * nu;
            }
        }
    });

    const bool nonlinear = cfg.solver.loss == "nonlinear";
    const bool expo = exponential_rule(ctx);
    std::vector<double> sqrt_w(N);
    for (std::size_t n = 0; n < N; ++n) sqrt_w[n] = std::sqrt(ctx.tables.w[n]);

    std::vector<std::vector<double>> h(L, st0.h.values);
    rep.min_F = *std::min_element(F0.values.begin(), F0.values.end());
    double prev_inc = 0.0;
    std::vector<double> level_damp(L, 1.0);
    std::vector<std::vector<double>> rho, S;
    for (int it = 0; it < cfg.picard.max_iter; ++it) {
        // Level 0 is the fixed initial datum; its rate and source are computed once.
        if (nonlinear) {
            if (rho.empty()) rho.push_back(rate_ratio(ctx, F0.values));
            rho.resize(1);
            for (std::size_t j = 1; j < L; ++j) rho.push_back(rate_ratio(ctx, F_from_h(ctx, h[j])));
        }
        if (cfg.solver.sources) {
            if (S.empty()) S = sources(ctx, {&h[0]});
            S.resize(1);
            std::vector<const std::vector<double>*> ptr;
            for (std::size_t j = 1; j < L; ++j) ptr.push_back(&h[j]);
            for (auto& x : sources(ctx, ptr)) S.push_back(std::move(x));
        }
        std::vector<std::vector<double>> hn(L, st0.h.values);
        parallel_for(N, [&](std::size_t n0, std::size_t n1) {
            std::vector<double> G(L), src(L);
            for (std::size_t n = n0; n < n1; ++n) {
                const Stencil* y = Y.data() + n * L;
                const double* gy = gY.data() + n * L;
                for (std::size_t j = 1; j < L; ++j) {
                    // Offsets k = 0..j along the path, level j - k.
                    double prev = 0.0;
                    G[0] = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) {
                        double r = gy[k] * (nonlinear ? read_or(g, rho[j - k], y[k], 1.0) : 1.0);
                        if (k > 0) G[k] = G[k - 1] + 0.5 * dtau * (prev + r);
                        prev = r;
                        if (!S.empty()) src[k] = read_or(g, S[j - k], y[k], 0.0);
                    }
                    double val = std::exp(-G[j]) * read_or(g, st0.h.values, y[j], 0.0);
                    if (!S.empty())
                        for (std::size_t k = 0; k < j; ++k) {
                            double gi = G[k + 1] - G[k];
                            if (expo) {
                                double wa, wb;
                                exponential_weights(gi, wa, wb);
                                val += dtau * std::exp(-G[k]) * (wa * src[k + 1] + wb * src[k]);
                            } else {
                                val += 0.5 * dtau * (std::exp(-G[k]) * src[k] + std::exp(-G[k + 1]) * src[k + 1]);
                            }
                        }
                    hn[j][n] = val;
                    if (n == ctx.reference_node) level_damp[j] = std::exp(-G[1]);
                }
            }
        });

        double inc = 0.0, sup = 0.0, minF = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < L; ++j)
            for (std::size_t n = 0; n < N; ++n) {
                if (!std::isfinite(hn[j][n])) report_blowup(ctx, j * dtau, n);
                inc = std::max(inc, std::abs(hn[j][n] - h[j][n]) / sqrt_w[n]);
                sup = std::max(sup, std::abs(hn[j][n]));
                minF = std::min(minF, ctx.tables.mu_E[n] + ctx.tables.sqrt_mu_E[n] * hn[j][n] / ctx.tables.w[n]);
            }
        rep.min_F = std::min(rep.min_F, minF);
        if (minF < -cfg.thresholds.tol_pos)
            throw AccuracyError("Picard iterate " + std::to_string(it + 1) + " has density " + fmt(minF) +
                                " below -tol_pos; refine the grid or the time step");
        rep.sup_norm.push_back(sup);
        rep.increment.push_back(inc);
        rep.ratio.push_back(it == 0 ? 0.0 : (prev_inc > 0.0 ? inc / prev_inc : (inc == 0.0 ? 0.0 : 1.0)));
        prev_inc = inc;
        h = std::move(hn);
        rep.iterations = it + 1;
        if (inc < cfg.picard.tol) {
            rep.converged = true;
            break;
        }
    }
    for (std::size_t j = 0; j < L; ++j) {
        DistributionField F(g, F_from_h(ctx, h[j]), FieldKind::F);
        for (auto& y : F.values) y = std::max(y, 0.0);
        res.times.push_back(j * dtau);
        res.F.push_back(std::move(F));
    }
    res.times.back() = Tend;
    res.damping = level_damp;
    return res;
}

// ---------------------------------------------------------------------------
// Run driver

Baseline make_baseline(const SolverContext& ctx, const DistributionField& F0) {
    return {conserved_quantities(F0, ctx.phi, ctx.degenerate), entropy_H(F0, 1e-300, ctx.config.thresholds.tol_pos)};
}

DiagnosticsRecord compute_record(const SolverContext& ctx, const SolverState& s, const Baseline& base) {
    const auto& th = ctx.config.thresholds;
    DiagnosticsRecord r;
    r.t = s.t;
    auto q = conserved_quantities(s.F, ctx.phi, ctx.degenerate);
    r.mass_drift = q.mass - base.moments.mass;
    r.energy_drift = q.energy - base.moments.energy;
    for (std::size_t k = 0; k < q.momentum.size(); ++k) r.momentum_drift.push_back(q.momentum[k] - base.moments.momentum[k]);
    for (int a = 0; a < 3; ++a) r.momentum_full_drift[a] = q.momentum_full[a] - base.moments.momentum_full[a];
    r.entropy_gap = entropy_gap(entropy_H(s.F, 1e-300, th.tol_pos), base.entropy);
    r.l2_norm = norm_l2(s.f);
    r.linf_h = norm_weighted_linf(s.h);
    auto sm = check_small_moment(s.f, th.C1, ctx.phi.m_norm());
    r.small_moment_worst = sm.worst;
    r.small_moment_pass = sm.pass;
    auto lb = check_loss_lower_bound(s.F, loss_rate_grid(s.F, ctx.op), ctx.tables, ctx.op, th.tol_bound);
    r.loss_bound_min_margin = lb.min_margin;
    r.loss_bound_pass = lb.pass;
    r.damping_sample = s.damping_sample;
    r.floored_mass = s.floored_mass;
    return r;
}

RunResult run(const ScenarioConfig& cfg, const RunObserver& obs) {
    SolverContext ctx(cfg);
    RunResult out;
    auto& sum = out.summary;

    double floored0 = 0.0;
    DistributionField F0 = initial_density(ctx, &floored0);
    SolverState state = make_state(ctx, F0, 0.0);
    state.floored_mass = floored0;
    const Baseline base = make_baseline(ctx, F0);

    sum.A0 = norm_weighted_linf(state.h);
    sum.l2_f0 = norm_l2(state.f);
    sum.M = ctx.phi.m_norm();
    sum.nu0 = std::min(ctx.op.nu_at(Vec{}), *std::min_element(ctx.op.nu().begin(), ctx.op.nu().end()));
    sum.t_tilde = activation_time(sum.M, sum.nu0, cfg.thresholds.C_tilde2, sum.A0);
    sum.closure = closure_constants(sum.A0, sum.M, sum.nu0, cfg.thresholds.closure_C0, cfg.thresholds.closure_delta);
    sum.T0 = picard_time(cfg.picard.C, sum.A0);
    sum.total_floored_mass = floored0;

    auto emit = [&](const SolverState& s, bool force) {
        if (!force && s.step % static_cast<std::size_t>(cfg.diag_every) != 0) return;
        out.records.push_back(compute_record(ctx, s, base));
        sum.max_linf_h = std::max(sum.max_linf_h, out.records.back().linf_h);
        if (obs.on_record) obs.on_record(out.records.back());
    };
    auto snap = [&](const SolverState& s, bool force) {
        if (!obs.on_snapshot || cfg.snapshot_every == 0) return;
        if (force || s.step % static_cast<std::size_t>(cfg.snapshot_every) == 0) obs.on_snapshot(s);
    };
    const double T = cfg.T;
    const double eps_t = 1e-12 * std::max(1.0, T);
    emit(state, true);
    snap(state, true);

    if (T > 0.0 && cfg.picard.enabled) {
        auto pr = local_picard_solve(ctx, F0, T);
        out.picard = pr.report;
        sum.picard_ran = true;
        if (obs.on_picard) obs.on_picard(pr.report);
        for (std::size_t j = 1; j < pr.F.size(); ++j) {
            DistributionField F = pr.F[j];
            double floored = cfg.solver.conservative_correction ? restore_moments(ctx, F, base.moments) : 0.0;
            SolverState next = make_state(ctx, F, pr.times[j]);
            next.step = state.step + 1;
            next.floored_mass = floored;
            next.damping_sample = pr.damping[j];
            state = std::move(next);
            sum.total_floored_mass += floored;
            bool last = j + 1 == pr.F.size() && state.t >= T - eps_t;
            emit(state, last);
            snap(state, last);
        }
    }

    if (state.t < T - eps_t) {
        std::optional<SemiLagrangian> full, tail;
        while (state.t < T - eps_t) {
            double remaining = T - state.t;
            const SemiLagrangian* st;
            if (remaining >= cfg.dt - eps_t) {
                if (!full) full.emplace(ctx, cfg.dt);
                st = &*full;
            } else {
                tail.emplace(ctx, remaining);
                st = &*tail;
            }
            state = st->step(state);
            if (state.t > T - eps_t) state.t = T;
            sum.total_floored_mass += state.floored_mass;
            bool last = state.t >= T - eps_t;
            emit(state, last);
            snap(state, last);
        }
    }
    sum.final_time = state.t;
    sum.steps = state.step;

    std::vector<Sample> linf, l2;
    for (const auto& r : out.records) {
        linf.push_back({r.t, r.linf_h});
        l2.push_back({r.t, r.l2_norm});
    }
    double tb = cfg.thresholds.fit_t_b < 0.0 ? T : cfg.thresholds.fit_t_b;
    try {
        sum.decay = decay_fit(linf, cfg.thresholds.fit_t_a, tb);
    } catch (const Error& e) {
        sum.decay_note = e.what();
    }
    sum.l2_growth = check_l2_growth(l2, sum.max_linf_h, cfg.thresholds.C_tilde1);
    return out;
}

}  // namespace kinpot
