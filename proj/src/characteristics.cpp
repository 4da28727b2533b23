#include "kinpot/characteristics.hpp"

#include <algorithm>
#include <cmath>

#include "kinpot/errors.hpp"
#include "kinpot/phase_space.hpp"

namespace kinpot {

namespace {

void wrap(Vec& x, int dim) {
    for (int i = 0; i < dim; ++i) x[i] = wrap_unit(x[i]);
}

bool finite(const PhasePoint& p) {
    for (int i = 0; i < 3; ++i)
        if (!std::isfinite(p.x[i]) || !std::isfinite(p.v[i])) return false;
    return true;
}

// One velocity-Verlet step of signed size ds for dX/ds = V, dV/ds = -grad Phi.
void verlet_step(const PotentialField& phi, int dim, PhasePoint& p, Vec& force, double ds) {
    Vec vh{};
    for (int i = 0; i < dim; ++i) vh[i] = p.v[i] - 0.5 * ds * force[i];
    for (int i = 0; i < dim; ++i) p.x[i] += ds * vh[i];
    wrap(p.x, dim);
    force = phi.gradient(p.x);
    for (int i = 0; i < dim; ++i) p.v[i] = vh[i] - 0.5 * ds * force[i];
}

void check_args(double t, double s_end, double substep) {
    if (!(s_end <= t) || !(s_end >= 0.0)) throw ContractError("backtrace requires 0 <= s_end <= t");
    if (!(substep > 0.0)) throw ContractError("substep must be positive");
}

}  // namespace

double hamiltonian(const PotentialField& phi, const Vec& x, const Vec& v) { return 0.5 * norm2(v) + phi.evaluate(x); }

int substep_count(double span, double substep) {
    if (span <= 0.0) return 0;
    return std::max(1, static_cast<int>(std::ceil(span / substep - 1e-9)));
}

Trajectory backtrace(const PotentialField& phi, int dim, double t, const Vec& x, const Vec& v, double s_end,
                     double substep) {
    check_args(t, s_end, substep);
    const double span = t - s_end;
    const int n = substep_count(span, substep);
    const double ds = n > 0 ? span / n : 0.0;
    Trajectory tr;
    tr.dim = dim;
    tr.times.reserve(n + 1);
    tr.states.reserve(n + 1);
    PhasePoint p{x, v};
    tr.times.push_back(t);
    tr.states.push_back(p);
    wrap(p.x, dim);
    const double h0 = hamiltonian(phi, x, v);
    Vec force = phi.gradient(p.x);
    for (int k = 1; k <= n; ++k) {
        verlet_step(phi, dim, p, force, -ds);
        if (!finite(p)) throw BlowupError("non-finite characteristic state at step " + std::to_string(k));
        tr.times.push_back(k == n ? s_end : t - k * ds);
        tr.states.push_back(p);
        tr.h_drift = std::max(tr.h_drift, std::abs(hamiltonian(phi, p.x, p.v) - h0));
    }
    return tr;
}

PhasePoint backtrace_endpoint(const PotentialField& phi, int dim, double span, const Vec& x, const Vec& v,
                              double substep) {
    const int n = substep_count(span, substep);
    PhasePoint p{x, v};
    wrap(p.x, dim);
    if (n == 0) return p;
    const double ds = span / n;
    Vec force = phi.gradient(p.x);
    for (int k = 0; k < n; ++k) verlet_step(phi, dim, p, force, -ds);
    if (!finite(p)) throw BlowupError("non-finite characteristic endpoint");
    return p;
}

PhasePoint integrate_forward(const PotentialField& phi, int dim, const PhasePoint& start, double ds, int steps) {
    PhasePoint p = start;
    Vec force = phi.gradient(p.x);
    for (int k = 0; k < steps; ++k) verlet_step(phi, dim, p, force, ds);
    return p;
}

double loss_integral(const Trajectory& traj, const RateFn& rate) {
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        double r = rate(traj.times[k], traj.states[k].x, traj.states[k].v);
        if (!(r >= 0.0)) throw ContractError("loss rate must be nonnegative along the trajectory");
        if (k > 0) acc += 0.5 * (traj.times[k - 1] - traj.times[k]) * (prev + r);
        prev = r;
    }
    return acc;
}

FlowJacobian flow_jacobian(const PotentialField& phi, int dim, double t, const Vec& x, const Vec& v, double s_end,
                           double substep) {
    check_args(t, s_end, substep);
    const double span = t - s_end;
    const int n = substep_count(span, substep);
    const double ds = n > 0 ? -span / n : 0.0;
    FlowJacobian fj;
    fj.dim = dim;
    PhasePoint p{x, v};
    wrap(p.x, dim);
    Mat J{};               // dX/dv
    Mat P = identity(dim);  // dV/dv
    auto record = [&](double s) {
        fj.times.push_back(s);
        fj.J.push_back(J);
        fj.det.push_back(det(J, dim));
    };
    record(t);
    Vec force = phi.gradient(p.x);
    Mat hess = phi.hessian(p.x);
    for (int k = 1; k <= n; ++k) {
        // Tangent map of the Verlet step: the exact derivative of the discrete flow.
        Mat Ph{};
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double hj = 0.0;
                for (int l = 0; l < dim; ++l) hj += hess[i][l] * J[l][j];
                Ph[i][j] = P[i][j] - 0.5 * ds * hj;
            }
        Vec vh{};
        for (int i = 0; i < dim; ++i) vh[i] = p.v[i] - 0.5 * ds * force[i];
        for (int i = 0; i < dim; ++i) p.x[i] += ds * vh[i];
        wrap(p.x, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) J[i][j] += ds * Ph[i][j];
        force = phi.gradient(p.x);
        hess = phi.hessian(p.x);
        for (int i = 0; i < dim; ++i) p.v[i] = vh[i] - 0.5 * ds * force[i];
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double hj = 0.0;
                for (int l = 0; l < dim; ++l) hj += hess[i][l] * J[l][j];
                P[i][j] = Ph[i][j] - 0.5 * ds * hj;
            }
        if (!finite(p)) throw BlowupError("non-finite characteristic state at step " + std::to_string(k));
        record(k == n ? s_end : t + k * ds);
    }
    return fj;
}

DetScan det_scan(const PotentialField& phi, int dim, double t, const Vec& x, const Vec& v, double threshold,
                 double substep) {
    if (!(threshold >= 0.0)) throw ContractError("det_scan threshold must be nonnegative");
    auto fj = flow_jacobian(phi, dim, t, x, v, 0.0, substep);
    // Walk in increasing s; nodes are stored in decreasing s.
    std::vector<double> s(fj.times.rbegin(), fj.times.rend());
    std::vector<double> a;
    for (auto it = fj.det.rbegin(); it != fj.det.rend(); ++it) a.push_back(std::abs(*it));
    DetScan out;
    if (s.size() == 1) {
        out.intervals.push_back({s[0], s[0], a[0] <= threshold});
        return out;
    }
    auto below = [&](double y) { return y <= threshold; };
    ScanInterval cur{s[0], s[0], below(a[0])};
    for (std::size_t k = 1; k < s.size(); ++k) {
        bool b = below(a[k]);
        if (b != cur.near_singular) {
            // Linear interpolation of |det| locates the threshold crossing.
            double y0 = a[k - 1], y1 = a[k];
            double th = y1 != y0 ? (threshold - y0) / (y1 - y0) : 0.5;
            th = std::clamp(th, 0.0, 1.0);
            double sc = s[k - 1] + th * (s[k] - s[k - 1]);
            cur.s_hi = sc;
            out.intervals.push_back(cur);
            cur = {sc, sc, b};
        }
        cur.s_hi = s[k];
    }
    out.intervals.push_back(cur);
    for (auto& iv : out.intervals)
        if (iv.near_singular) out.singular_measure += iv.s_hi - iv.s_lo;
    return out;
}

}  // namespace kinpot
