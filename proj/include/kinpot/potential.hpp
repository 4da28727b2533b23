#pragma once

#include <array>
#include <vector>

#include "kinpot/vec.hpp"

namespace kinpot {

struct Mode {
    std::array<int, 3> k{};
    double a = 0.0;  // cosine coefficient
    double b = 0.0;  // sine coefficient
};

// Finite trigonometric series on the unit torus of dimension d.
// Coordinates beyond d are ignored, so the field can be embedded in a
// larger ambient space.
class PotentialField {
public:
    PotentialField() = default;
    PotentialField(int d, std::vector<Mode> modes, double shift = 0.0);

    int dim() const { return d_; }
    const std::vector<Mode>& modes() const { return modes_; }
    double shift() const { return shift_; }
    double m_norm() const { return m_norm_; }
    int max_wavenumber() const;
    bool is_zero() const;

    double evaluate(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;
    double derivative(const std::array<int, 3>& alpha, const Vec& x) const;

private:
    int d_ = 1;
    std::vector<Mode> modes_;
    double shift_ = 0.0;
    double m_norm_ = 0.0;
};

struct DegenerateSubspace {
    std::vector<int> indices;  // 0-based
    int n0() const { return static_cast<int>(indices.size()); }
};

// Default per-axis sampling used for the cached norm.
int default_norm_samples(const PotentialField& phi);

double c3_norm_estimate(const PotentialField& phi, int samples_per_axis);

// Directions i < ambient_dim with dPhi/dx_i identically zero.
DegenerateSubspace degenerate_directions(const PotentialField& phi, int ambient_dim = 3);

struct MinimumEstimate {
    double value;
    Vec location;
};
MinimumEstimate estimate_minimum(const PotentialField& phi);

PotentialField normalize_nonnegative(const PotentialField& phi);

}  // namespace kinpot
