#include "kinpot/collision.hpp"

#include <cmath>
#include <numbers>

#include "kinpot/errors.hpp"
#include "kinpot/parallel.hpp"

namespace kinpot {

double CollisionKernelSpec::b(double c) const {
    double a = std::abs(c);
    return angular_exponent == 1.0 ? c_b * a : c_b * std::pow(a, angular_exponent);
}

double CollisionKernelSpec::b_integral(int dim) const {
    const double q = angular_exponent;
    if (dim == 3) return c_b * 4.0 * std::numbers::pi / (q + 1.0);
    return c_b * 2.0 * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (q + 1.0)) / std::tgamma(0.5 * q + 1.0);
}

void CollisionKernelSpec::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("gamma must lie in [0, 1]");
    if (!(c_b > 0.0)) throw ContractError("c_b must be positive");
    if (!(angular_exponent >= 1.0)) throw ContractError("angular_exponent must be at least 1 (cutoff b <= C|cos|)");
    if (n_angle < 2 || n_azimuth < 1) throw ContractError("angular node counts too small");
    if (!(eps_reg > 0.0)) throw ContractError("eps_reg must be positive");
}

PostCollision post_collision(const Vec& v, const Vec& u, const Vec& omega) {
    if (std::abs(norm(omega) - 1.0) > 1e-12) throw ContractError("omega must be a unit vector");
    double s = dot(u - v, omega);
    return {v + s * omega, u - s * omega};
}

namespace {

SphereRule fold_antipodal(const SphereRule& r, int n_polar, int n_azimuth) {
    // Nodes k and -k give the same post-collision pair; keep one of each.
    SphereRule h;
    h.dim = r.dim;
    auto take = [&](std::size_t k) {
        h.cos_theta.push_back(r.cos_theta[k]);
        h.sin_theta.push_back(r.sin_theta[k]);
        h.cos_phi.push_back(r.cos_phi[k]);
        h.sin_phi.push_back(r.sin_phi[k]);
        h.weight.push_back(2.0 * r.weight[k]);
    };
    if (r.dim == 2 && n_polar % 2 == 0) {
        for (int j = 0; j < n_polar / 2; ++j) take(j);
        return h;
    }
    if (r.dim == 3 && n_polar % 2 == 0 && n_azimuth % 2 == 0) {
        for (std::size_t k = 0; k < r.size(); ++k)
            if (r.cos_theta[k] > 0.0) take(k);
        return h;
    }
    return r;
}

// |v-u|^gamma; exact shortcuts for the common exponents.
inline double speed_power(double r, double gamma) {
    return gamma == 1.0 ? r : gamma == 0.0 ? 1.0 : std::pow(r, gamma);
}

struct Frame {
    Vec n{1.0, 0.0, 0.0}, e1{0.0, 1.0, 0.0}, e2{0.0, 0.0, 1.0};
    double r = 0.0;
};

Frame frame_for(const Vec& v, const Vec& u, int dim) {
    Frame f;
    Vec z = v - u;
    f.r = norm(z);
    if (f.r > 0.0) {
        f.n = (1.0 / f.r) * z;
        if (dim == 3) orthonormal_frame(f.n, f.e1, f.e2);
    }
    return f;
}

// Corner indices and weights of a multilinear velocity stencil.
int corners(const PhaseGrid& g, const VelocityCell& c, std::size_t* idx, double* w) {
    const std::size_t nv = g.nv();
    if (g.d_v() == 2) {
        std::size_t b = c.lo[0] * nv + c.lo[1];
        double t0 = c.frac[0], t1 = c.frac[1];
        idx[0] = b, w[0] = (1 - t0) * (1 - t1);
        idx[1] = b + 1, w[1] = (1 - t0) * t1;
        idx[2] = b + nv, w[2] = t0 * (1 - t1);
        idx[3] = b + nv + 1, w[3] = t0 * t1;
        return 4;
    }
    std::size_t b = (c.lo[0] * nv + c.lo[1]) * nv + c.lo[2];
    double t[3] = {c.frac[0], c.frac[1], c.frac[2]};
    for (int m = 0; m < 8; ++m) {
        int a0 = (m >> 2) & 1, a1 = (m >> 1) & 1, a2 = m & 1;
        idx[m] = b + a0 * nv * nv + a1 * nv + a2;
        w[m] = (a0 ? t[0] : 1 - t[0]) * (a1 ? t[1] : 1 - t[1]) * (a2 ? t[2] : 1 - t[2]);
    }
    return 8;
}

}  // namespace

CollisionOperator::CollisionOperator(const PhaseGrid& grid, const CollisionKernelSpec& spec)
    : grid_(grid), spec_(spec) {
    spec_.validate();
    rule_ = make_sphere_rule(grid.d_v(), spec.n_angle, spec.n_azimuth);
    half_rule_ = fold_antipodal(rule_, spec.n_angle, spec.n_azimuth);
    for (std::size_t k = 0; k < rule_.size(); ++k) b_sum_ += rule_.weight[k] * spec_.b(rule_.cos_theta[k]);
    const std::size_t NV = grid.n_v_cells();
    mu_.resize(NV);
    sqrt_mu_.resize(NV);
    for (std::size_t i = 0; i < NV; ++i) {
        const Vec& v = grid.v_nodes()[i];
        mu_[i] = maxwellian_mu(v);
        sqrt_mu_[i] = std::exp(-0.25 * norm2(v));
    }
    nu_.resize(NV);
    for (std::size_t i = 0; i < NV; ++i) nu_[i] = nu_at(grid.v_nodes()[i]);
}

double CollisionOperator::loss_sum(const double* F, const Vec& v) const {
    const auto& nodes = grid_.v_nodes();
    const auto& w = grid_.v_weights();
    double s = 0.0;
    // Same association as loss_matrix so lattice values agree bit for bit.
    for (std::size_t j = 0; j < nodes.size(); ++j) s += w[j] * speed_power(norm(v - nodes[j]), spec_.gamma) * b_sum_ * F[j];
    return s;
}

const std::vector<double>& CollisionOperator::loss_matrix() const {
    if (!A_.empty()) return A_;
    const auto& nodes = grid_.v_nodes();
    const auto& w = grid_.v_weights();
    const std::size_t NV = nodes.size();
    std::vector<double> A(NV * NV);
    parallel_for(NV, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i)
            for (std::size_t j = 0; j < NV; ++j)
                A[i * NV + j] = w[j] * speed_power(norm(nodes[i] - nodes[j]), spec_.gamma) * b_sum_;
    });
    A_ = std::move(A);
    return A_;
}

double CollisionOperator::nu_at(const Vec& v) const { return loss_sum(mu_.data(), v); }

std::vector<double> CollisionOperator::ratio_of(const VelocitySlice& s) const {
    std::vector<double> r(mu_.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        double m = s.background == 0.0 ? 1.0 : s.background == 1.0 ? mu_[i] : std::pow(mu_[i], s.background);
        r[i] = s.values[i] / m;
    }
    return r;
}

double CollisionOperator::read(const VelocitySlice& s, const std::vector<double>& ratio, const Vec& p) const {
    auto c = locate_velocity(grid_, p);
    if (c.outside) return s.maxwellian_extension ? s.ext_scale * maxwellian_mu(p) : 0.0;
    double val = interpolate_velocity(grid_, ratio.data(), c);
    if (s.background == 0.0) return val;
    double m = maxwellian_mu(p);
    return (s.background == 1.0 ? m : std::pow(m, s.background)) * val;
}

double CollisionOperator::q_gain(const VelocitySlice& F1, const VelocitySlice& F2, const Vec& v) const {
    auto r1 = ratio_of(F1), r2 = ratio_of(F2);
    const auto& nodes = grid_.v_nodes();
    const auto& w = grid_.v_weights();
    const int dim = grid_.d_v();
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const Vec& u = nodes[j];
        Frame fr = frame_for(v, u, dim);
        double rg = speed_power(fr.r, spec_.gamma);
        if (rg == 0.0) continue;
        double inner = 0.0;
        for (std::size_t k = 0; k < rule_.size(); ++k) {
            double bk = spec_.b(rule_.cos_theta[k]);
            if (bk == 0.0) continue;
            Vec om = sphere_node(rule_, k, fr.n, fr.e1, fr.e2);
            double s = fr.r * rule_.cos_theta[k];  // -(u - v).omega
            Vec vp = v - s * om, up = u + s * om;
            inner += rule_.weight[k] * bk * read(F1, r1, up) * read(F2, r2, vp);
        }
        acc += w[j] * rg * inner;
    }
    return acc;
}

double CollisionOperator::q_loss(const VelocitySlice& F1, const VelocitySlice& F2, const Vec& v) const {
    auto r2 = ratio_of(F2);
    return read(F2, r2, v) * loss_sum(F1.values, v);
}

const std::vector<double>& CollisionOperator::K_matrix() const {
    if (!K_.empty()) return K_;
    const std::size_t NV = mu_.size();
    const auto& nodes = grid_.v_nodes();
    const auto& w = grid_.v_weights();
    const int dim = grid_.d_v();
    std::vector<double> inv_sqrt_mu(NV);
    for (std::size_t i = 0; i < NV; ++i) inv_sqrt_mu[i] = 1.0 / sqrt_mu_[i];
    std::vector<double> K(NV * NV, 0.0);
    parallel_for(NV, [&](std::size_t i0, std::size_t i1) {
        std::size_t ia[8], ib[8];
        double wa[8], wb[8];
        for (std::size_t i = i0; i < i1; ++i) {
            const Vec& v = nodes[i];
            double* row = K.data() + i * NV;
            for (std::size_t j = 0; j < NV; ++j) {
                const Vec& u = nodes[j];
                Frame fr = frame_for(v, u, dim);
                double rg = speed_power(fr.r, spec_.gamma);
                if (rg == 0.0) continue;
                double cu = sqrt_mu_[i] * w[j] * mu_[j] * rg;
                row[j] -= cu * b_sum_ * inv_sqrt_mu[j];
                for (std::size_t k = 0; k < half_rule_.size(); ++k) {
                    double c = cu * half_rule_.weight[k] * spec_.b(half_rule_.cos_theta[k]);
                    if (c == 0.0) continue;
                    Vec om = sphere_node(half_rule_, k, fr.n, fr.e1, fr.e2);
                    double s = fr.r * half_rule_.cos_theta[k];
                    auto cv = locate_velocity(grid_, v - s * om);
                    auto cw = locate_velocity(grid_, u + s * om);
                    if (!cv.outside) {
                        int m = corners(grid_, cv, ia, wa);
                        for (int a = 0; a < m; ++a) row[ia[a]] += c * wa[a] * inv_sqrt_mu[ia[a]];
                    }
                    if (!cw.outside) {
                        int m = corners(grid_, cw, ib, wb);
                        for (int a = 0; a < m; ++a) row[ib[a]] += c * wb[a] * inv_sqrt_mu[ib[a]];
                    }
                }
            }
        }
    });
    K_ = std::move(K);
    return K_;
}

std::vector<double> CollisionOperator::apply_K(const double* f) const {
    const auto& K = K_matrix();
    const std::size_t NV = mu_.size();
    std::vector<double> out(NV, 0.0);
    for (std::size_t i = 0; i < NV; ++i) {
        double s = 0.0;
        const double* row = K.data() + i * NV;
        for (std::size_t j = 0; j < NV; ++j) s += row[j] * f[j];
        out[i] = s;
    }
    return out;
}

double CollisionOperator::apply_K_at(const double* f, const Vec& v) const {
    // K2 - K1 with f read as sqrt(mu) * interp(f / sqrt(mu)), zero outside the box.
    const std::size_t NV = mu_.size();
    std::vector<double> r(NV);
    for (std::size_t i = 0; i < NV; ++i) r[i] = f[i] / sqrt_mu_[i];
    const auto& nodes = grid_.v_nodes();
    const auto& w = grid_.v_weights();
    const int dim = grid_.d_v();
    auto rd = [&](const Vec& p) {
        auto c = locate_velocity(grid_, p);
        return c.outside ? 0.0 : interpolate_velocity(grid_, r.data(), c);
    };
    double acc = 0.0;
    for (std::size_t j = 0; j < NV; ++j) {
        const Vec& u = nodes[j];
        Frame fr = frame_for(v, u, dim);
        double rg = speed_power(fr.r, spec_.gamma);
        if (rg == 0.0) continue;
        double inner = -b_sum_ * r[j];
        for (std::size_t k = 0; k < rule_.size(); ++k) {
            double bk = spec_.b(rule_.cos_theta[k]);
            if (bk == 0.0) continue;
            Vec om = sphere_node(rule_, k, fr.n, fr.e1, fr.e2);
            double s = fr.r * rule_.cos_theta[k];
            inner += rule_.weight[k] * bk * (rd(v - s * om) + rd(u + s * om));
        }
        acc += w[j] * mu_[j] * rg * inner;
    }
    return std::exp(-0.25 * norm2(v)) * acc;
}

CollisionOperator::GainLoss CollisionOperator::gamma_nonlinear(const double* f1, const double* f2, const Vec& v) const {
    const std::size_t NV = mu_.size();
    std::vector<double> g1(NV), g2(NV);
    for (std::size_t i = 0; i < NV; ++i) {
        g1[i] = sqrt_mu_[i] * f1[i];
        g2[i] = sqrt_mu_[i] * f2[i];
    }
    VelocitySlice s1{g1.data(), 1.0, false, 0.0}, s2{g2.data(), 1.0, false, 0.0};
    double inv = std::exp(0.25 * norm2(v));
    return {inv * q_gain(s1, s2, v), inv * q_loss(s1, s2, v)};
}

std::vector<double> CollisionOperator::gamma_gain(const double* f1, const double* f2) const {
    const std::size_t NV = mu_.size();
    std::vector<double> out(NV);
    if (f1 == f2) {
        std::vector<double> r(NV);
        for (std::size_t i = 0; i < NV; ++i) r[i] = f1[i] / sqrt_mu_[i];
        gamma_gain_batch(r.data(), 1, out.data());
        return out;
    }
    for (std::size_t i = 0; i < NV; ++i) out[i] = gamma_nonlinear(f1, f2, grid_.v_nodes()[i]).gain;
    return out;
}

void CollisionOperator::gamma_gain_batch(const double* r, std::size_t batch, double* out) const {
    const std::size_t NV = mu_.size();
    const auto& nodes = grid_.v_nodes();
    const auto& w = grid_.v_weights();
    const int dim = grid_.d_v();
    const std::size_t nk = half_rule_.size();
    std::vector<double> bk(nk);
    for (std::size_t k = 0; k < nk; ++k) bk[k] = half_rule_.weight[k] * spec_.b(half_rule_.cos_theta[k]);
    parallel_for(NV, [&](std::size_t i0, std::size_t i1) {
        std::vector<double> acc(batch);
        std::size_t ia[8], ib[8];
        double wa[8], wb[8];
        for (std::size_t i = i0; i < i1; ++i) {
            const Vec& v = nodes[i];
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j < NV; ++j) {
                const Vec& u = nodes[j];
                Frame fr = frame_for(v, u, dim);
                double rg = speed_power(fr.r, spec_.gamma);
                if (rg == 0.0) continue;
                double cu = w[j] * mu_[j] * rg;
                for (std::size_t k = 0; k < nk; ++k) {
                    double c = cu * bk[k];
                    if (c == 0.0) continue;
                    Vec om = sphere_node(half_rule_, k, fr.n, fr.e1, fr.e2);
                    double s = fr.r * half_rule_.cos_theta[k];
                    auto cv = locate_velocity(grid_, v - s * om);
                    if (cv.outside) continue;
                    auto cw = locate_velocity(grid_, u + s * om);
                    if (cw.outside) continue;
                    int m = corners(grid_, cw, ia, wa);
                    corners(grid_, cv, ib, wb);
                    if (m == 4) {
                        const double *a0 = r + ia[0] * batch, *a1 = r + ia[1] * batch, *a2 = r + ia[2] * batch,
                                     *a3 = r + ia[3] * batch;
                        const double *b0 = r + ib[0] * batch, *b1 = r + ib[1] * batch, *b2 = r + ib[2] * batch,
                                     *b3 = r + ib[3] * batch;
                        for (std::size_t q = 0; q < batch; ++q) {
                            double x = wa[0] * a0[q] + wa[1] * a1[q] + wa[2] * a2[q] + wa[3] * a3[q];
                            double y = wb[0] * b0[q] + wb[1] * b1[q] + wb[2] * b2[q] + wb[3] * b3[q];
                            acc[q] += c * x * y;
                        }
                    } else {
                        for (std::size_t q = 0; q < batch; ++q) {
                            double x = 0.0, y = 0.0;
                            for (int a = 0; a < 8; ++a) {
                                x += wa[a] * r[ia[a] * batch + q];
                                y += wb[a] * r[ib[a] * batch + q];
                            }
                            acc[q] += c * x * y;
                        }
                    }
                }
            }
            for (std::size_t q = 0; q < batch; ++q) out[i * batch + q] = sqrt_mu_[i] * acc[q];
        }
    });
}

}  // namespace kinpot
