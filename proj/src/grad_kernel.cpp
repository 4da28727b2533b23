#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinpot/collision.hpp"
#include "kinpot/errors.hpp"

namespace kinpot {

namespace {

constexpr double kPi = std::numbers::pi;

// Sign-normalized direction so that (v,u) and (u,v) share one transverse frame.
Vec canonical_axis(const Vec& d) {
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(d[i]) > std::abs(d[k])) k = i;
    return d[k] < 0 ? -1.0 * d : d;
}

// Nodes on [0, L]: sinh-graded on [0, min(1, L)] around the kink scale r,
// unit-width Gauss-Legendre panels beyond.
Rule1D transverse_nodes(double r, double L) {
    Rule1D out;
    const double inner = std::min(1.0, L);
    auto gl = gauss_legendre(24, 0.0, std::asinh(inner / r));
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        out.x.push_back(r * std::sinh(gl.x[i]));
        out.w.push_back(gl.w[i] * r * std::cosh(gl.x[i]));
    }
    std::vector<double> edges;
    for (double e = inner; e < L; e += 1.0) edges.push_back(e);
    edges.push_back(L);
    if (edges.size() >= 2) {
        auto p = composite_gauss_legendre(edges, 10);
        out.x.insert(out.x.end(), p.x.begin(), p.x.end());
        out.w.insert(out.w.end(), p.w.begin(), p.w.end());
    }
    return out;
}

Rule1D radial_panels(double L, double width, int per_panel) {
    std::vector<double> edges;
    for (double e = 0.0; e < L; e += width) edges.push_back(e);
    edges.push_back(L);
    return composite_gauss_legendre(edges, per_panel);
}

}  // namespace

double grad_kernel_k1(const CollisionKernelSpec& spec, int dim, const Vec& v, const Vec& u) {
    double r = std::max(norm(v - u), spec.eps_reg);
    return std::exp(-0.25 * (norm2(v) + norm2(u))) * std::pow(r, spec.gamma) * spec.b_integral(dim);
}

double grad_kernel_k2(const CollisionKernelSpec& spec, int dim, const Vec& v, const Vec& u) {
    if (dim != 2 && dim != 3) throw ContractError("kernel dimension must be 2 or 3");
    Vec d = u - v;
    double r_true = norm(d);
    const double r = std::max(r_true, spec.eps_reg);
    Vec n = r_true > 0 ? canonical_axis((1.0 / r_true) * d) : Vec{1.0, 0.0, 0.0};
    Vec c = 0.5 * (u + v);
    const double e0 = -0.25 * (norm2(u) + norm2(v));
    const double g = spec.gamma;
    // Carleman form: the v'-term carries |z|^g b(r/|z|) / r^{d-1}, the
    // u'-term |z|^g b(rho/|z|) rho^{2-d} / r, integrated over the plane
    // orthogonal to u - v with Gaussian exp(e0 - y.c - |y|^2/2).
    if (dim == 3) {
        Vec cp = c - dot(c, n) * n;
        const double a = norm(cp);
        auto nodes = transverse_nodes(r, a + 10.0);
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.x.size(); ++i) {
            double rho = nodes.x[i];
            double z = std::sqrt(r * r + rho * rho);
            double zg = std::pow(z, g);
            double x = rho * a;
            double radial = std::exp(e0 - 0.5 * rho * rho + x) * (std::cyl_bessel_i(0.0, x) * std::exp(-x));
            double term = zg * (spec.b(r / z) * rho / (r * r) + spec.b(rho / z) / r);
            s += nodes.w[i] * radial * term;
        }
        return 2.0 * 2.0 * kPi * s;
    }
    Vec e{-n[1], n[0], 0.0};
    const double a = dot(c, e);
    auto nodes = transverse_nodes(r, std::abs(a) + 10.0);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.x.size(); ++i) {
        double y = nodes.x[i];
        double z = std::sqrt(r * r + y * y);
        double both = std::exp(e0 - 0.5 * y * y - y * a) + std::exp(e0 - 0.5 * y * y + y * a);
        double term = std::pow(z, g) * (spec.b(r / z) + spec.b(y / z)) / r;
        s += nodes.w[i] * both * term;
    }
    return 2.0 * s;
}

double grad_kernel_k(const CollisionKernelSpec& spec, int dim, const Vec& v, const Vec& u) {
    return grad_kernel_k2(spec, dim, v, u) - grad_kernel_k1(spec, dim, v, u);
}

double nu_continuum(const CollisionKernelSpec& spec, int dim, const Vec& v) {
    const double a = norm(v);
    auto nodes = radial_panels(a + 12.0, 0.5, 12);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.x.size(); ++i) {
        double rho = nodes.x[i];
        double ang;
        if (dim == 3) {
            // Spherical mean of exp(-|v + rho sigma|^2 / 2).
            double x = rho * a;
            if (x < 1e-8)
                ang = 4.0 * kPi * std::exp(-0.5 * (a * a + rho * rho)) * (1.0 + x * x / 6.0);
            else
                ang = 4.0 * kPi * (std::exp(-0.5 * (rho - a) * (rho - a)) - std::exp(-0.5 * (rho + a) * (rho + a))) /
                      (2.0 * x);
            s += nodes.w[i] * std::pow(rho, 2.0 + spec.gamma) * ang;
        } else {
            double x = rho * a;
            ang = 2.0 * kPi * std::exp(-0.5 * (rho - a) * (rho - a)) * (std::cyl_bessel_i(0.0, x) * std::exp(-x));
            s += nodes.w[i] * std::pow(rho, 1.0 + spec.gamma) * ang;
        }
    }
    return spec.b_integral(dim) * s;
}

double polar_integral(int dim, const Vec& v, const std::function<double(const Vec&)>& g, const PolarRule& rule) {
    auto radial = radial_panels(rule.radius, rule.radius / rule.n_radial_panels, rule.per_panel);
    SphereRule ang = make_sphere_rule(dim, rule.n_polar, rule.n_azimuth);
    const Vec ez{0, 0, 1}, ex{1, 0, 0}, ey{0, 1, 0};
    const Vec axis = dim == 3 ? ez : ex;
    double s = 0.0;
    for (std::size_t i = 0; i < radial.x.size(); ++i) {
        double rho = radial.x[i];
        double jac = dim == 3 ? rho * rho : rho;
        double inner = 0.0;
        for (std::size_t k = 0; k < ang.size(); ++k) {
            Vec sig = sphere_node(ang, k, axis, ex, ey);
            inner += ang.weight[k] * g(v + rho * sig);
        }
        s += radial.w[i] * jac * inner;
    }
    return s;
}

double apply_K_kernel(const CollisionKernelSpec& spec, int dim, const std::function<double(const Vec&)>& f,
                      const Vec& v, const PolarRule& rule) {
    return polar_integral(dim, v, [&](const Vec& u) { return grad_kernel_k(spec, dim, v, u) * f(u); }, rule);
}

}  // namespace kinpot
