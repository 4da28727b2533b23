#include "kinpot/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinpot/errors.hpp"
#include "kinpot/parallel.hpp"

namespace kinpot {

ConservedQuantities conserved_quantities(const DistributionField& F, const PotentialField& phi,
                                         const DegenerateSubspace& degenerate) {
    if (F.kind != FieldKind::F) throw ContractError("conserved_quantities expects a density field");
    const auto& g = F.grid;
    ConservedQuantities q;
    q.momentum.assign(degenerate.indices.size(), 0.0);
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix) {
        double ph = phi.evaluate(g.x_node(ix));
        double e = std::exp(-ph);
        double m = 0.0, en = 0.0;
        Vec p{};
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            const Vec& v = g.v_nodes()[iv];
            double d = g.v_weight(iv) * (F.at(ix, iv) - maxwellian_mu(v) * e);
            m += d;
            en += (0.5 * norm2(v) + ph) * d;
            for (int a = 0; a < g.d_v(); ++a) p[a] += v[a] * d;
        }
        q.mass += m;
        q.energy += en;
        for (int a = 0; a < 3; ++a) q.momentum_full[a] += p[a];
    }
    const double wx = g.x_weight();
    q.mass *= wx;
    q.energy *= wx;
    for (int a = 0; a < 3; ++a) q.momentum_full[a] *= wx;
    for (std::size_t k = 0; k < degenerate.indices.size(); ++k) {
        int i = degenerate.indices[k];
        q.momentum[k] = i < g.d_v() ? q.momentum_full[i] : 0.0;
    }
    return q;
}

double entropy_H(const DistributionField& F, double floor_H, double tol_pos) {
    if (F.kind != FieldKind::F) throw ContractError("entropy_H expects a density field");
    const auto& g = F.grid;
    double s = 0.0;
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            double y = F.at(ix, iv);
            if (y < -tol_pos) throw ContractError("entropy of a negative density");
            if (y <= floor_H) continue;
            s += g.v_weight(iv) * y * std::log(y);
        }
    return s * g.x_weight();
}

std::vector<double> loss_rate_grid(const DistributionField& F, const CollisionOperator& op) {
    const auto& g = F.grid;
    const auto& A = op.loss_matrix();
    const std::size_t NX = g.n_x_cells(), NV = g.n_v_cells();
    std::vector<double> R(g.size());
    parallel_for(NX, [&](std::size_t x0, std::size_t x1) {
        for (std::size_t ix = x0; ix < x1; ++ix) {
            const double* Fx = F.values.data() + ix * NV;
            for (std::size_t i = 0; i < NV; ++i) {
                const double* row = A.data() + i * NV;
                double s = 0.0;
                for (std::size_t j = 0; j < NV; ++j) s += row[j] * Fx[j];
                R[ix * NV + i] = s;
            }
        }
    });
    return R;
}

LossBoundCheck check_loss_lower_bound(const DistributionField& F, const std::vector<double>& rate,
                                      const NodeTables& tables, const CollisionOperator& op, double tol_bound) {
    const auto& g = F.grid;
    const std::size_t NV = g.n_v_cells();
    LossBoundCheck c;
    c.margin.resize(g.size());
    c.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix) {
        double e = std::exp(-tables.phi_x[ix]);
        for (std::size_t iv = 0; iv < NV; ++iv) {
            std::size_t n = ix * NV + iv;
            c.margin[n] = rate[n] - 0.5 * e * op.nu()[iv];
            c.min_margin = std::min(c.min_margin, c.margin[n]);
        }
    }
    c.pass = c.min_margin >= -tol_bound;
    return c;
}

LossBoundCheck check_loss_lower_bound(const DistributionField& F, const PotentialField& phi,
                                      const CollisionOperator& op, double tol_bound) {
    auto tables = node_tables(F.grid, phi, WeightParams{0.0});
    return check_loss_lower_bound(F, loss_rate_grid(F, op), tables, op, tol_bound);
}

double small_moment_threshold(double C1, double M) { return std::exp(-0.5 * M) / (2.0 * C1); }

SmallMomentCheck check_small_moment(const DistributionField& f, double C1, double M) {
    if (f.kind != FieldKind::f) throw ContractError("check_small_moment expects kind f");
    if (!(C1 >= 1.0)) throw ContractError("threshold constant C1 must be at least 1");
    SmallMomentCheck c;
    c.threshold = small_moment_threshold(C1, M);
    for (std::size_t ix = 0; ix < f.grid.n_x_cells(); ++ix) {
        double m = small_velocity_moment(f, ix);
        if (m > c.worst) {
            c.worst = m;
            c.worst_cell = ix;
        }
    }
    c.pass = c.worst <= c.threshold;
    return c;
}

L2GrowthCheck check_l2_growth(const std::vector<Sample>& series, double A1, double C_tilde1) {
    if (series.empty()) throw InsufficientDataError("L2 growth check needs at least one sample");
    const double f0 = series.front().value;
    auto holds = [&](double C) {
        for (const auto& s : series)
            if (s.value > C * f0 * std::exp(C * A1 * s.t) * (1.0 + 1e-12)) return false;
        return true;
    };
    L2GrowthCheck r;
    r.pass = holds(C_tilde1);
    double hi = 1.0;
    while (!holds(hi) && hi < 1e300) hi *= 2.0;
    if (!holds(hi)) {
        r.minimal_constant = std::numeric_limits<double>::infinity();
        return r;
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (holds(mid) ? hi : lo) = mid;
    }
    r.minimal_constant = hi;
    return r;
}

DecayFit decay_fit(const std::vector<Sample>& series, double t_a, double t_b) {
    if (!(t_a < t_b)) throw ContractError("decay fit window must satisfy t_a < t_b");
    std::vector<double> ts, ys;
    for (const auto& s : series)
        if (s.t >= t_a && s.t <= t_b && s.value > 0.0 && std::isfinite(s.value)) {
            ts.push_back(s.t);
            ys.push_back(std::log(s.value));
        }
    if (ts.size() < 3) throw InsufficientDataError("decay fit needs at least 3 positive samples in the window");
    const double n = static_cast<double>(ts.size());
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tm += ts[i];
        ym += ys[i];
    }
    tm /= n;
    ym /= n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - tm) * (ts[i] - tm);
        sty += (ts[i] - tm) * (ys[i] - ym);
    }
    if (stt == 0.0) throw InsufficientDataError("decay fit needs distinct sample times");
    double slope = sty / stt;
    double icept = ym - slope * tm;
    double rss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double r = ys[i] - (icept + slope * ts[i]);
        rss += r * r;
    }
    DecayFit d;
    d.t_a = t_a;
    d.t_b = t_b;
    d.rate = -slope;
    d.prefactor = std::exp(icept);
    d.residual = std::sqrt(rss / n);
    d.samples = ts.size();
    return d;
}

double activation_time(double M, double nu0, double C_tilde2, double A0) {
    if (!(nu0 > 0.0)) throw ContractError("activation time needs a positive collision frequency floor");
    double lg = std::log(C_tilde2) + 0.5 * M + std::log(A0);
    if (A0 <= 0.0) return -std::numeric_limits<double>::infinity();
    double pre = 2.0 * std::exp(M) / nu0;
    return pre * lg;
}

ClosureConstants closure_constants(double A0, double M, double nu0, double C0, double delta) {
    if (!(nu0 > 0.0) || !(delta > 0.0)) throw ContractError("closure constants need nu0 > 0 and delta > 0");
    double C4 = std::max(2.0, C0);
    double nu_t = std::exp(-M) * nu0;
    ClosureConstants c;
    if (A0 <= 0.0) {
        c.A1 = 0.0;
        c.T1 = -std::numeric_limits<double>::infinity();
        return c;
    }
    double lnA1 = std::log(4.0 * C4 * C4 * A0 * A0) + 4.0 * C4 * A0 * A0 / nu_t;
    c.A1 = std::exp(lnA1);
    c.T1 = 8.0 / nu_t * (lnA1 + std::abs(std::log(delta)));
    return c;
}

}  // namespace kinpot
