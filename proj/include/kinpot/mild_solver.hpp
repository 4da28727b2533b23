#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kinpot/characteristics.hpp"
#include "kinpot/collision.hpp"
#include "kinpot/diagnostics.hpp"
#include "kinpot/phase_space.hpp"
#include "kinpot/potential.hpp"

namespace kinpot {

struct PotentialSpec {
    std::vector<Mode> modes;
    double shift = 0.0;
    bool auto_shift = true;
};

struct GridSpec {
    int d_x = 1;
    int d_v = 2;
    int nx = 32;
    int nv = 24;
    double v_max = 6.0;
    double tail_tol = 1e-8;
};

struct InitialDataSpec {
    std::string family = "small-smooth";  // localized-bump | high-frequency | small-smooth | equilibrium
    double amplitude = 0.01;              // sup of |h0| after projection
    Vec x_center{0.5, 0.5, 0.5};
    Vec v_center{0.0, 0.0, 0.0};
    double x_radius = 0.0625;
    double v_radius = 1.0;
    int mode = 4;          // x wavenumber of the high-frequency family
    double v_width = 1.0;  // Gaussian width in v
    bool zero_moments = true;
    double noise = 0.0;  // relative amplitude of seeded node noise
};

struct Thresholds {
    double C1 = 1.0;        // small-moment constant
    double C_tilde1 = 1.0;  // L2 growth constant
    double C_tilde2 = 1.0;  // activation-time constant
    double delta_star = 0.1;
    double tol_pos = 1e-9;
    double tol_bound = 0.0;
    double closure_C0 = 2.0;
    double closure_delta = 0.5;
    double fit_t_a = 1.0;
    double fit_t_b = -1.0;  // negative: use the horizon
};

struct PicardOptions {
    bool enabled = true;
    double C = 1.0;
    double tol = 1e-10;
    int max_iter = 50;
};

struct SolverOptions {
    bool sources = true;
    std::string loss = "nonlinear";  // nonlinear: R(F); linear: e^{-Phi} nu
    bool conservative_correction = true;
    std::string source_quadrature = "exponential";  // exponential | trapezoid
};

struct ScenarioConfig {
    PotentialSpec potential;
    GridSpec grid;
    CollisionKernelSpec kernel;
    double beta = 4.0;
    InitialDataSpec initial_data;
    double T = 1.0;
    double dt = 0.01;
    double substep = 1e-3;
    int diag_every = 1;
    int snapshot_every = 0;
    Thresholds thresholds;
    PicardOptions picard;
    SolverOptions solver;
    std::uint64_t seed = 0;

    // Every violated constraint, empty when valid.
    std::vector<std::string> problems() const;
};

// Everything derived once from a configuration.
struct SolverContext {
    explicit SolverContext(const ScenarioConfig& cfg);

    ScenarioConfig config;
    PotentialField phi;
    PhaseGrid grid;
    WeightParams weight;
    NodeTables tables;
    DegenerateSubspace degenerate;
    CollisionOperator op;
    std::size_t reference_node = 0;  // node used for the damping sample
};

struct SolverState {
    double t = 0.0;
    DistributionField F, f, h;
    std::size_t step = 0;
    double floored_mass = 0.0;    // mass removed by flooring in the last update
    double damping_sample = 1.0;  // e^{-loss integral} over the last step at the reference node
};

SolverState make_state(const SolverContext& ctx, const DistributionField& F, double t);

// R(F)(x_cell, v) by lattice quadrature.
double loss_rate_R(const CollisionOperator& op, const DistributionField& F, std::size_t x_cell, const Vec& v);

// I(t,s) = exp(-int R) along a stored trajectory.
double damping_factor_I(const Trajectory& traj, const RateFn& rate);
// Rate R(F(s))(X, V) with F read from a history; x-interpolation is relative
// to mu_E so an equilibrium history gives exactly e^{-Phi(X)} nu(V).
RateFn history_rate(const SolverContext& ctx, std::function<const DistributionField&(double)> history);

// Initial density for the configured family; reports the floored mass.
DistributionField initial_density(const SolverContext& ctx, double* floored_mass = nullptr);

// Adds sum_k c_k psi_k mu_E so the mass, energy and degenerate momenta equal
// the target, then floors F at 0. Returns the floored mass.
double restore_moments(const SolverContext& ctx, DistributionField& F, const ConservedQuantities& target);

struct PicardReport {
    double T0 = 0.0;
    double C = 1.0;
    double h0_sup = 0.0;
    int levels = 0;  // ladder intervals
    double dtau = 0.0;
    std::vector<double> sup_norm;   // per iteration: max over levels of ||h^n||_inf
    std::vector<double> increment;  // per iteration: ||(h^{n+1} - h^n)/sqrt(w)||_inf
    std::vector<double> ratio;      // increment[n] / increment[n-1]
    double min_F = 0.0;             // least density value over all iterates
    int iterations = 0;
    bool converged = false;
};

struct PicardResult {
    std::vector<double> times;
    std::vector<DistributionField> F;  // per ladder level
    std::vector<double> damping;       // one-interval damping factor at the reference node, per level
    PicardReport report;
};

// Picard iteration on [0, min(T0, horizon)].
PicardResult local_picard_solve(const SolverContext& ctx, const DistributionField& F0, double horizon);
inline double picard_time(double C, double h0_sup) { return 1.0 / (8.0 * C * (1.0 + h0_sup)); }

// Semi-Lagrangian marcher with characteristic geometry cached for one dt.
class SemiLagrangian {
public:
    SemiLagrangian(const SolverContext& ctx, double dt);
    double dt() const { return dt_; }
    SolverState step(const SolverState& s) const;
    // Source grid w [e^{-Phi} K f + e^{-Phi/2} Gamma_+(f, f)] at the frozen state.
    std::vector<double> source_grid(const SolverState& s) const;
    // R(F) / (e^{-Phi} nu) at nodes.
    std::vector<double> rate_ratio_grid(const SolverState& s) const;

private:
    const SolverContext& ctx_;
    double dt_;
    std::size_t stride_ = 0;  // trajectory nodes per phase node
    double ds_ = 0.0;         // uniform substep length
    std::vector<Stencil> foot_;
    std::vector<Stencil> path_;      // node-major, from the arrival node back to the foot
    std::vector<double> path_rate_;  // e^{-Phi(X)} nu(V) at each trajectory node
};

SolverState step_semi_lagrangian(const SolverContext& ctx, const SolverState& s, double dt);

// Weights of the product rule int_0^1 e^{-g u} [u a + (1-u) b] du = wa a + wb b.
void exponential_weights(double g, double& wa, double& wb);

struct DiagnosticsRecord {
    double t = 0.0;
    double mass_drift = 0.0;
    double energy_drift = 0.0;
    std::vector<double> momentum_drift;
    double entropy_gap = 0.0;
    double l2_norm = 0.0;
    double linf_h = 0.0;
    double small_moment_worst = 0.0;
    bool small_moment_pass = false;
    double loss_bound_min_margin = 0.0;
    bool loss_bound_pass = false;
    double damping_sample = 1.0;
    double floored_mass = 0.0;
    Vec momentum_full_drift{};
};

struct Baseline {
    ConservedQuantities moments;
    double entropy = 0.0;
};
Baseline make_baseline(const SolverContext& ctx, const DistributionField& F0);
DiagnosticsRecord compute_record(const SolverContext& ctx, const SolverState& s, const Baseline& base);

struct RunSummary {
    double A0 = 0.0;
    double l2_f0 = 0.0;
    double M = 0.0;
    double nu0 = 0.0;
    double t_tilde = 0.0;
    ClosureConstants closure;
    double T0 = 0.0;
    double final_time = 0.0;
    std::size_t steps = 0;
    double total_floored_mass = 0.0;
    double max_linf_h = 0.0;
    std::optional<DecayFit> decay;
    std::string decay_note;
    L2GrowthCheck l2_growth;
    bool picard_ran = false;
};

struct RunObserver {
    std::function<void(const DiagnosticsRecord&)> on_record;
    std::function<void(const SolverState&)> on_snapshot;
    std::function<void(const PicardReport&)> on_picard;
};

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    PicardReport picard;
    RunSummary summary;
};

RunResult run(const ScenarioConfig& cfg, const RunObserver& observer = {});

}  // namespace kinpot
