#pragma once

#include <functional>
#include <vector>

#include "kinpot/phase_space.hpp"
#include "kinpot/quadrature.hpp"
#include "kinpot/vec.hpp"

namespace kinpot {

// B(v-u, omega) = |v-u|^gamma * b(theta), b(theta) = c_b * |cos theta|^angular_exponent.
struct CollisionKernelSpec {
    double gamma = 1.0;
    double c_b = 1.0;
    double angular_exponent = 1.0;
    int n_angle = 16;    // polar nodes (3D) or circle nodes (2D)
    int n_azimuth = 16;  // 3D only
    double eps_reg = 1e-6;

    double b(double cos_theta) const;
    // Exact integral of b over the unit sphere (d = 3) or circle (d = 2).
    double b_integral(int dim) const;
    void validate() const;
};

struct PostCollision {
    Vec v;
    Vec u;
};
PostCollision post_collision(const Vec& v, const Vec& u, const Vec& omega);

// Velocity-lattice data with the rule used to read it off-lattice.
// Interpolation is multilinear in values / mu^background, multiplied back by
// mu^background at the query point. Outside the box the slice returns
// ext_scale * mu(v) (kind-F slices) or zero.
struct VelocitySlice {
    const double* values = nullptr;
    double background = 1.0;
    bool maxwellian_extension = false;
    double ext_scale = 1.0;
};

class CollisionOperator {
public:
    CollisionOperator(const PhaseGrid& grid, const CollisionKernelSpec& spec);

    const PhaseGrid& grid() const { return grid_; }
    const CollisionKernelSpec& spec() const { return spec_; }
    const SphereRule& rule() const { return rule_; }
    // Discrete sphere sum of b; equals sum_k w_k b(theta_k) for every pair.
    double b_sum() const { return b_sum_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<double>& nu() const { return nu_; }  // at lattice nodes

    double nu_at(const Vec& v) const;
    double q_gain(const VelocitySlice& F1, const VelocitySlice& F2, const Vec& v) const;
    double q_loss(const VelocitySlice& F1, const VelocitySlice& F2, const Vec& v) const;
    // sum_u w_u |v-u|^gamma b_sum F(u): the loss rate of a density slice.
    double loss_sum(const double* F, const Vec& v) const;

    // Kf at every lattice node, f a kind-f slice (zero outside the box).
    std::vector<double> apply_K(const double* f) const;
    double apply_K_at(const double* f, const Vec& v) const;
    // Dense matrix of apply_K (row-major, NV x NV).
    const std::vector<double>& K_matrix() const;
    // Row-major NV x NV matrix with loss_sum(F, v_i) = sum_j A_ij F_j.
    const std::vector<double>& loss_matrix() const;

    struct GainLoss {
        double gain;
        double loss;
    };
    GainLoss gamma_nonlinear(const double* f1, const double* f2, const Vec& v) const;
    // Gain part of Gamma(f1, f2) at every lattice node.
    std::vector<double> gamma_gain(const double* f1, const double* f2) const;

    // Gain part of Gamma(f, f) for a batch of slices stored node-major:
    // r[iv * batch + b] = f_b(v_iv) / sqrt(mu(v_iv)). Output out[iv * batch + b].
    void gamma_gain_batch(const double* r, std::size_t batch, double* out) const;

private:
    double read(const VelocitySlice& s, const std::vector<double>& ratio, const Vec& p) const;
    std::vector<double> ratio_of(const VelocitySlice& s) const;

    PhaseGrid grid_;
    CollisionKernelSpec spec_;
    SphereRule rule_;
    SphereRule half_rule_;  // antipodal nodes folded; same sums up to rounding
    double b_sum_ = 0.0;
    std::vector<double> mu_, sqrt_mu_, nu_;
    mutable std::vector<double> K_, A_;
};

// Pointwise Grad kernel of K = K2 - K1 (continuum, dimension 2 or 3).
double grad_kernel_k1(const CollisionKernelSpec& spec, int dim, const Vec& v, const Vec& u);
double grad_kernel_k2(const CollisionKernelSpec& spec, int dim, const Vec& v, const Vec& u);
double grad_kernel_k(const CollisionKernelSpec& spec, int dim, const Vec& v, const Vec& u);

// Continuum collision frequency by a converged radial quadrature.
double nu_continuum(const CollisionKernelSpec& spec, int dim, const Vec& v);

// Integral of g(u) over R^dim in polar coordinates centred at v; absorbs the
// |v-u|^{-1} singularity of the kernel.
struct PolarRule {
    int n_radial_panels = 12;
    int per_panel = 8;
    double radius = 12.0;
    int n_polar = 32;  // circle nodes in 2D, Gauss-Legendre nodes in 3D
    int n_azimuth = 24;
};
double polar_integral(int dim, const Vec& v, const std::function<double(const Vec& u)>& g, const PolarRule& rule = {});

// (Kf)(v) = int k(v,u) f(u) du with the pointwise kernel.
double apply_K_kernel(const CollisionKernelSpec& spec, int dim, const std::function<double(const Vec&)>& f,
                      const Vec& v, const PolarRule& rule = {});

}  // namespace kinpot
