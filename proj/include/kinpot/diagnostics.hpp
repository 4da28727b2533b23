#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "kinpot/collision.hpp"
#include "kinpot/phase_space.hpp"
#include "kinpot/potential.hpp"

namespace kinpot {

// Perturbation moments of F relative to mu_E.
struct ConservedQuantities {
    double mass = 0.0;
    double energy = 0.0;
    std::vector<double> momentum;  // degenerate indices only, in DegenerateSubspace order
    Vec momentum_full{};           // informational
};
ConservedQuantities conserved_quantities(const DistributionField& F, const PotentialField& phi,
                                         const DegenerateSubspace& degenerate);

// Quadrature of F ln F; cells with F <= floor_H contribute 0.
double entropy_H(const DistributionField& F, double floor_H = 1e-300, double tol_pos = 1e-9);
inline double entropy_gap(double H_F, double H_F0) { return H_F - H_F0; }

// R(F) at every node: sum_u w_u |v-u|^gamma b_sum F(x,u).
std::vector<double> loss_rate_grid(const DistributionField& F, const CollisionOperator& op);

struct LossBoundCheck {
    std::vector<double> margin;  // R(F) - e^{-Phi} nu / 2 per node
    double min_margin = 0.0;
    bool pass = false;
};
LossBoundCheck check_loss_lower_bound(const DistributionField& F, const std::vector<double>& rate,
                                      const NodeTables& tables, const CollisionOperator& op, double tol_bound = 0.0);
LossBoundCheck check_loss_lower_bound(const DistributionField& F, const PotentialField& phi,
                                      const CollisionOperator& op, double tol_bound = 0.0);

struct SmallMomentCheck {
    double worst = 0.0;
    std::size_t worst_cell = 0;
    double threshold = 0.0;
    bool pass = false;
};
double small_moment_threshold(double C1, double M);
SmallMomentCheck check_small_moment(const DistributionField& f, double C1, double M);

struct Sample {
    double t;
    double value;
};

struct L2GrowthCheck {
    bool pass = false;
    double minimal_constant = 1.0;  // least C with ||f(t)|| <= C ||f0|| e^{C A1 t} on every sample
};
L2GrowthCheck check_l2_growth(const std::vector<Sample>& series, double A1, double C_tilde1);

struct DecayFit {
    double t_a = 0.0, t_b = 0.0;
    double rate = 0.0;       // positive means decay
    double prefactor = 0.0;  // value of the fit at t = 0
    double residual = 0.0;   // RMS of log residuals
    std::size_t samples = 0;
};
DecayFit decay_fit(const std::vector<Sample>& series, double t_a, double t_b);

// Activation time after which the loss-rate lower bound is expected; +inf
// when it overflows.
double activation_time(double M, double nu0, double C_tilde2, double A0);

struct ClosureConstants {
    double A1 = 0.0;
    double T1 = 0.0;
};
// C4 = max(2, C0); nu_tilde = e^{-M} nu0.
ClosureConstants closure_constants(double A0, double M, double nu0, double C0, double delta);

}  // namespace kinpot
