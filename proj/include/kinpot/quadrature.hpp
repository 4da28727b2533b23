#pragma once

#include <vector>

#include "kinpot/vec.hpp"

namespace kinpot {

struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Composite Gauss-Legendre over consecutive panel edges.
Rule1D composite_gauss_legendre(const std::vector<double>& edges, int per_panel);

// Angular rule expressed in a frame aligned with the relative velocity:
// each node stores cos(theta) to the axis and the in-plane azimuth.
struct SphereRule {
    int dim = 3;
    std::vector<double> cos_theta;
    std::vector<double> sin_theta;
    std::vector<double> cos_phi;  // azimuth (3D only)
    std::vector<double> sin_phi;
    std::vector<double> weight;
    std::size_t size() const { return weight.size(); }
};

// dim = 3: n_polar Gauss-Legendre nodes in cos(theta) times n_azimuth uniform nodes.
// dim = 2: n_polar uniform nodes on the circle (n_azimuth ignored).
SphereRule make_sphere_rule(int dim, int n_polar, int n_azimuth);

// Orthonormal completion (e1, e2) of a unit vector n in 3D.
void orthonormal_frame(const Vec& n, Vec& e1, Vec& e2);

// Unit vector of the rule node k relative to axis n.
Vec sphere_node(const SphereRule& r, std::size_t k, const Vec& n, const Vec& e1, const Vec& e2);

}  // namespace kinpot
