#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinpot/collision.hpp"

namespace kinpot {

// A fitted constant: the largest ratio lhs/rhs over the first half of the
// samples. max_violation_ratio is the largest ratio over the held-out second
// half divided by that constant (<= 1 when the fit generalizes).
struct BoundResult {
    std::string name;
    double fitted_constant = 0.0;
    std::size_t sample_size = 0;
    double max_violation_ratio = 0.0;
};

struct BoundOptions {
    std::uint64_t seed = 0;
    std::size_t kernel_pairs = 10000;
    double pair_box = 4.0;  // random velocities in [-pair_box, pair_box]^d
    std::size_t slices = 100;
    std::vector<double> ladder{0.0, 2.0, 4.0};
};

BoundResult fit_ratios(const std::string& name, const std::vector<double>& ratios);

// Largest |k(v,u) - k(u,v)| over random pairs.
double kernel_symmetry_defect(const CollisionKernelSpec& spec, int dim, const BoundOptions& opt);

// |k| against {|v-u| + |v-u|^{-1}} e^{-|v-u|^2/8} e^{-(|v|^2-|u|^2)^2/(8|v-u|^2)}.
BoundResult grad_kernel_bound(const CollisionKernelSpec& spec, int dim, const BoundOptions& opt);

// (1+|v|) int |k(v,u)| (1+|v|)^a e^{t|v|^2} / ((1+|u|)^a e^{t|u|^2}) du along the ladder.
struct WeightedIntegralScan {
    double alpha = 0.0;
    double theta = 0.0;
    std::vector<double> speeds;
    std::vector<double> ratio;  // (1+|v|) times the integral
    bool non_increasing(double slack) const;
};
WeightedIntegralScan weighted_kernel_scan(const CollisionKernelSpec& spec, int dim, double alpha, double theta,
                                          const std::vector<double>& speeds);

// (1+|v|)^{a+1} Gamma_+(f,f)(v) against ||(1+|.|)^a f||_inf (int (1+|u|)^4 f^2)^{1/2}.
BoundResult gain_pointwise_bound(const CollisionOperator& op, double alpha, const BoundOptions& opt);

// ||Gamma(f,f)||_2 against ||f||_2 ||nu f||_2.
BoundResult l2_bilinear_bound(const CollisionOperator& op, const BoundOptions& opt);

// Seeded smooth test slice: polynomial times an off-centre Gaussian, sampled on the lattice.
std::vector<double> random_slice(const PhaseGrid& g, std::uint64_t seed, std::size_t index);

std::vector<BoundResult> verify_bounds(const CollisionOperator& op, const BoundOptions& opt);

}  // namespace kinpot
