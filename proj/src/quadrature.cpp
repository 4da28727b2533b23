#include "kinpot/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "kinpot/errors.hpp"

namespace kinpot {

Rule1D gauss_legendre(int n, double a, double b) {
    if (n < 1) throw ContractError("Gauss-Legendre rule needs at least one node");
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
        }
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
        r.x[i] = mid + half * r.x[i];
        r.w[i] *= half;
    }
    return r;
}

Rule1D composite_gauss_legendre(const std::vector<double>& edges, int per_panel) {
    Rule1D out;
    auto base = gauss_legendre(per_panel);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        double half = 0.5 * (edges[p + 1] - edges[p]), mid = 0.5 * (edges[p + 1] + edges[p]);
        for (int i = 0; i < per_panel; ++i) {
            out.x.push_back(mid + half * base.x[i]);
            out.w.push_back(half * base.w[i]);
        }
    }
    return out;
}

SphereRule make_sphere_rule(int dim, int n_polar, int n_azimuth) {
    SphereRule r;
    r.dim = dim;
    if (dim == 2) {
        if (n_polar < 2) throw ContractError("circle rule needs at least two nodes");
        // Even counts: Gauss-Legendre on the two half circles split where
        // cos changes sign, so |cos|^q is integrated spectrally and node
        // j + n/2 is the antipode of node j.
        auto add = [&](double ph, double w) {
            r.cos_theta.push_back(std::cos(ph));
            r.sin_theta.push_back(std::sin(ph));
            r.cos_phi.push_back(1.0);
            r.sin_phi.push_back(0.0);
            r.weight.push_back(w);
        };
        const double pi = std::numbers::pi;
        if (n_polar % 2 == 0) {
            auto gl = gauss_legendre(n_polar / 2, -0.5 * pi, 0.5 * pi);
            for (double shift : {0.0, pi})
                for (int j = 0; j < n_polar / 2; ++j) add(gl.x[j] + shift, gl.w[j]);
        } else {
            for (int j = 0; j < n_polar; ++j) add(2.0 * pi * (j + 0.5) / n_polar, 2.0 * pi / n_polar);
        }
        return r;
    }
    if (dim != 3) throw ContractError("sphere rule dimension must be 2 or 3");
    if (n_polar < 1 || n_azimuth < 1) throw ContractError("sphere rule needs positive node counts");
    // Even counts split the polar rule at cos(theta) = 0.
    Rule1D gl = n_polar % 2 == 0 ? composite_gauss_legendre({-1.0, 0.0, 1.0}, n_polar / 2) : gauss_legendre(n_polar);
    for (int i = 0; i < n_polar; ++i)
        for (int j = 0; j < n_azimuth; ++j) {
            double ph = 2.0 * std::numbers::pi * (j + 0.5) / n_azimuth;
            r.cos_theta.push_back(gl.x[i]);
            r.sin_theta.push_back(std::sqrt(std::max(0.0, 1.0 - gl.x[i] * gl.x[i])));
            r.cos_phi.push_back(std::cos(ph));
            r.sin_phi.push_back(std::sin(ph));
            r.weight.push_back(gl.w[i] * 2.0 * std::numbers::pi / n_azimuth);
        }
    return r;
}

void orthonormal_frame(const Vec& n, Vec& e1, Vec& e2) {
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(n[i]) < std::abs(n[k])) k = i;
    Vec a{};
    a[k] = 1.0;
    Vec t = a - dot(a, n) * n;
    e1 = (1.0 / norm(t)) * t;
    e2 = cross(n, e1);
}

Vec sphere_node(const SphereRule& r, std::size_t k, const Vec& n, const Vec& e1, const Vec& e2) {
    if (r.dim == 2) {
        double c = r.cos_theta[k], s = r.sin_theta[k];
        return {c * n[0] - s * n[1], s * n[0] + c * n[1], 0.0};
    }
    double ct = r.cos_theta[k], st = r.sin_theta[k];
    return ct * n + st * (r.cos_phi[k] * e1 + r.sin_phi[k] * e2);
}

}  // namespace kinpot
