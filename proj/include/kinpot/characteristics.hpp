#pragma once

#include <functional>
#include <vector>

#include "kinpot/potential.hpp"
#include "kinpot/vec.hpp"

namespace kinpot {

struct PhasePoint {
    Vec x{};
    Vec v{};
};

// Backward characteristic from (x, v) at time t down to s_end.
struct Trajectory {
    int dim = 3;
    std::vector<double> times;  // decreasing, times[0] = t
    std::vector<PhasePoint> states;
    double h_drift = 0.0;
};

struct FlowJacobian {
    int dim = 3;
    std::vector<double> times;
    std::vector<Mat> J;  // dX/dv
    std::vector<double> det;
};

double hamiltonian(const PotentialField& phi, const Vec& x, const Vec& v);

// Number of uniform Verlet steps used to cover a span with at most `substep` each.
int substep_count(double span, double substep);

Trajectory backtrace(const PotentialField& phi, int dim, double t, const Vec& x, const Vec& v, double s_end,
                     double substep);

// Forward Verlet over the given number of uniform steps of size ds > 0.
PhasePoint integrate_forward(const PotentialField& phi, int dim, const PhasePoint& p, double ds, int steps);

// Endpoint only; no storage of intermediate nodes.
PhasePoint backtrace_endpoint(const PotentialField& phi, int dim, double span, const Vec& x, const Vec& v,
                              double substep);

using RateFn = std::function<double(double s, const Vec& X, const Vec& V)>;
double loss_integral(const Trajectory& traj, const RateFn& rate);

FlowJacobian flow_jacobian(const PotentialField& phi, int dim, double t, const Vec& x, const Vec& v, double s_end,
                           double substep);

struct ScanInterval {
    double s_lo = 0.0;
    double s_hi = 0.0;
    bool near_singular = false;
};

struct DetScan {
    std::vector<ScanInterval> intervals;  // ordered by increasing s, covering [s_end, t]
    double singular_measure = 0.0;
};

DetScan det_scan(const PotentialField& phi, int dim, double t, const Vec& x, const Vec& v, double threshold,
                 double substep);

}  // namespace kinpot
