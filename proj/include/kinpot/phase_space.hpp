#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "kinpot/potential.hpp"
#include "kinpot/vec.hpp"

namespace kinpot {

// Periodic unit torus in x times the box [-v_max, v_max]^d_v in v.
class PhaseGrid {
public:
    PhaseGrid() = default;
    PhaseGrid(int d_x, int d_v, int nx, int nv, double v_max, double tail_tol = 1e-8);

    int d_x() const { return d_x_; }
    int d_v() const { return d_v_; }
    int nx() const { return nx_; }
    int nv() const { return nv_; }
    double v_max() const { return v_max_; }
    double tail_tol() const { return tail_tol_; }
    double hx() const { return 1.0 / nx_; }
    double hv() const { return 2.0 * v_max_ / (nv_ - 1); }

    std::size_t n_x_cells() const { return n_x_cells_; }
    std::size_t n_v_cells() const { return n_v_cells_; }
    std::size_t size() const { return n_x_cells_ * n_v_cells_; }
    std::size_t index(std::size_t ix, std::size_t iv) const { return ix * n_v_cells_ + iv; }

    Vec x_node(std::size_t ix) const;
    Vec v_node(std::size_t iv) const;
    double x_weight() const { return x_weight_; }
    double v_weight(std::size_t iv) const { return v_weights_[iv]; }
    const std::vector<double>& v_weights() const { return v_weights_; }
    const std::vector<Vec>& v_nodes() const { return v_nodes_; }
    double v_axis(int j) const { return -v_max_ + j * hv(); }
    double v_box_volume() const;

    bool operator==(const PhaseGrid& o) const {
        return d_x_ == o.d_x_ && d_v_ == o.d_v_ && nx_ == o.nx_ && nv_ == o.nv_ && v_max_ == o.v_max_;
    }

private:
    int d_x_ = 1, d_v_ = 2, nx_ = 4, nv_ = 8;
    double v_max_ = 6.0, tail_tol_ = 1e-8;
    std::size_t n_x_cells_ = 0, n_v_cells_ = 0;
    double x_weight_ = 0.0;
    std::vector<double> v_weights_;
    std::vector<Vec> v_nodes_;
};

// Fraction of Maxwellian mass outside the velocity box.
double maxwellian_tail_mass(int d_v, double v_max);

enum class FieldKind { F, f, h };
const char* kind_name(FieldKind k);
FieldKind kind_from_name(const std::string& s);

struct DistributionField {
    PhaseGrid grid;
    std::vector<double> values;
    FieldKind kind = FieldKind::f;

    DistributionField() = default;
    DistributionField(PhaseGrid g, FieldKind k);
    DistributionField(PhaseGrid g, std::vector<double> v, FieldKind k);

    double& at(std::size_t ix, std::size_t iv) { return values[grid.index(ix, iv)]; }
    double at(std::size_t ix, std::size_t iv) const { return values[grid.index(ix, iv)]; }
    void validate(double tol_pos = 0.0) const;
};

struct WeightParams {
    double beta = 4.0;
};

double maxwellian_mu(const Vec& v);
double local_maxwellian_mu_E(const PotentialField& phi, const Vec& x, const Vec& v);
double weight_w_beta(const WeightParams& p, const PotentialField& phi, const Vec& x, const Vec& v);

// Precomputed per-node equilibrium quantities for a grid and potential.
struct NodeTables {
    std::vector<double> phi_x;    // Phi at x nodes
    std::vector<double> mu_v;     // mu at v nodes
    std::vector<double> mu_E;     // per phase node
    std::vector<double> sqrt_mu_E;
    std::vector<double> w;        // w_beta per phase node
};
NodeTables node_tables(const PhaseGrid& g, const PotentialField& phi, const WeightParams& p);

struct Perturbation {
    DistributionField f;
    DistributionField h;
};
Perturbation perturbation_from_F(const DistributionField& F, const PotentialField& phi, const WeightParams& p);
DistributionField F_from_perturbation(const DistributionField& f, const PotentialField& phi);
DistributionField h_from_f(const DistributionField& f, const PotentialField& phi, const WeightParams& p);
DistributionField f_from_h(const DistributionField& h, const PotentialField& phi, const WeightParams& p);

// Separable multilinear stencil for one phase-space query point.
struct Stencil {
    std::array<int, 3> x_lo{}, x_hi{};
    std::array<double, 3> x_frac{};
    std::array<int, 3> v_lo{};
    std::array<double, 3> v_frac{};
    bool outside_v = false;
};
Stencil make_stencil(const PhaseGrid& g, const Vec& x, const Vec& v);
// Weighted sum of raw node values; caller handles outside_v.
double apply_stencil(const PhaseGrid& g, const double* values, const Stencil& s);

// Velocity-only cell location: lower lattice index and fraction per axis.
struct VelocityCell {
    std::array<int, 3> lo{};
    std::array<double, 3> frac{};
    bool outside = false;
};
VelocityCell locate_velocity(const PhaseGrid& g, const Vec& v);
double interpolate_velocity(const PhaseGrid& g, const double* slice, const VelocityCell& c);

double interpolate(const DistributionField& field, const Vec& x, const Vec& v, const PotentialField& phi);
double interpolate(const DistributionField& field, const Vec& x, const Vec& v);

double norm_l2(const DistributionField& f);
double norm_weighted_linf(const DistributionField& h);
double small_velocity_moment(const DistributionField& f, std::size_t x_cell);

// Wrap a coordinate onto [0,1).
double wrap_unit(double x);

struct SnapshotMeta {
    double time = 0.0;
    std::string config_hash;
};
void write_snapshot(const std::string& path_stem, const DistributionField& field, const SnapshotMeta& meta);
DistributionField read_snapshot(const std::string& path_stem);

}  // namespace kinpot
