#include "kinpot/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kinpot/errors.hpp"

namespace kinpot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double phase(const Mode& m, const Vec& x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += m.k[i] * x[i];
    return kTwoPi * s;
}

// Visit every point of a uniform grid with n points per axis in d dims.
template <class Fn>
void for_each_sample(int d, int n, Fn&& fn) {
    std::array<int, 3> idx{};
    int total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    for (int flat = 0; flat < total; ++flat) {
        int r = flat;
        Vec x{};
        for (int i = d - 1; i >= 0; --i) {
            idx[i] = r % n;
            r /= n;
            x[i] = static_cast<double>(idx[i]) / n;
        }
        fn(x);
    }
}

std::vector<std::array<int, 3>> multi_indices(int d, int max_order) {
    std::vector<std::array<int, 3>> out;
    for (int a = 0; a <= max_order; ++a)
        for (int b = 0; b <= (d > 1 ? max_order : 0); ++b)
            for (int c = 0; c <= (d > 2 ? max_order : 0); ++c)
                if (a + b + c <= max_order) out.push_back({a, b, c});
    return out;
}

}  // namespace

PotentialField::PotentialField(int d, std::vector<Mode> modes, double shift)
    : d_(d), modes_(std::move(modes)), shift_(shift) {
    if (d < 1 || d > 3) throw ContractError("potential dimension must be 1, 2 or 3");
    for (auto& m : modes_) {
        for (int i = d; i < 3; ++i)
            if (m.k[i] != 0) throw ContractError("wave-vector has components beyond the potential dimension");
        if (!std::isfinite(m.a) || !std::isfinite(m.b)) throw ContractError("non-finite mode coefficient");
    }
    m_norm_ = c3_norm_estimate(*this, default_norm_samples(*this));
}

int PotentialField::max_wavenumber() const {
    int km = 0;
    for (auto& m : modes_)
        for (int i = 0; i < d_; ++i) km = std::max(km, std::abs(m.k[i]));
    return km;
}

bool PotentialField::is_zero() const {
    if (shift_ != 0.0) return false;
    for (auto& m : modes_) {
        bool constant = m.k[0] == 0 && m.k[1] == 0 && m.k[2] == 0;
        if (m.a != 0.0 || (!constant && m.b != 0.0)) return false;
    }
    return true;
}

double PotentialField::evaluate(const Vec& x) const {
    double s = shift_;
    for (auto& m : modes_) {
        double th = phase(m, x, d_);
        s += m.a * std::cos(th) + m.b * std::sin(th);
    }
    return s;
}

Vec PotentialField::gradient(const Vec& x) const {
    Vec g{};
    for (auto& m : modes_) {
        double th = phase(m, x, d_);
        double c = kTwoPi * (-m.a * std::sin(th) + m.b * std::cos(th));
        for (int i = 0; i < d_; ++i) g[i] += c * m.k[i];
    }
    return g;
}

Mat PotentialField::hessian(const Vec& x) const {
    Mat h{};
    for (auto& m : modes_) {
        double th = phase(m, x, d_);
        double c = -kTwoPi * kTwoPi * (m.a * std::cos(th) + m.b * std::sin(th));
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) h[i][j] += c * m.k[i] * m.k[j];
    }
    return h;
}

double PotentialField::derivative(const std::array<int, 3>& alpha, const Vec& x) const {
    int order = alpha[0] + alpha[1] + alpha[2];
    double s = order == 0 ? shift_ : 0.0;
    for (auto& m : modes_) {
        double kf = 1.0;
        for (int i = 0; i < 3; ++i) kf *= std::pow(static_cast<double>(m.k[i]), alpha[i]);
        if (kf == 0.0) continue;
        double th = phase(m, x, d_) + order * std::numbers::pi / 2;
        s += std::pow(kTwoPi, order) * kf * (m.a * std::cos(th) + m.b * std::sin(th));
    }
    return s;
}

int default_norm_samples(const PotentialField& phi) {
    int base = std::max(8, 8 * phi.max_wavenumber());
    if (phi.dim() == 1) return 4 * base;
    if (phi.dim() == 2) return 2 * base;
    return base;
}

double c3_norm_estimate(const PotentialField& phi, int samples_per_axis) {
    if (samples_per_axis < 2 * phi.max_wavenumber() + 1)
        throw ContractError("samples_per_axis must be at least 2*max|k|+1");
    auto alphas = multi_indices(phi.dim(), 3);
    double m = 0.0;
    for_each_sample(phi.dim(), samples_per_axis, [&](const Vec& x) {
        for (auto& a : alphas) m = std::max(m, std::abs(phi.derivative(a, x)));
    });
    return m;
}

DegenerateSubspace degenerate_directions(const PotentialField& phi, int ambient_dim) {
    DegenerateSubspace out;
    for (int i = 0; i < ambient_dim; ++i) {
        bool degenerate = true;
        if (i < phi.dim())
            for (auto& m : phi.modes())
                if (m.k[i] != 0 && (m.a != 0.0 || m.b != 0.0)) degenerate = false;
        if (degenerate) out.indices.push_back(i);
    }
    return out;
}

MinimumEstimate estimate_minimum(const PotentialField& phi) {
    const int d = phi.dim();
    const int n = std::max(8, 4 * phi.max_wavenumber());
    MinimumEstimate best{phi.evaluate(Vec{}), Vec{}};
    for_each_sample(d, n, [&](const Vec& x) {
        double v = phi.evaluate(x);
        if (v < best.value) best = {v, x};
    });
    // Newton polish from the best grid point; keep only improvements.
    Vec x = best.location;
    for (int it = 0; it < 50; ++it) {
        Vec g = phi.gradient(x);
        Mat h = phi.hessian(x);
        Vec step{};
        bool ok = false;
        if (d == 1 && h[0][0] > 0) {
            step[0] = g[0] / h[0][0];
            ok = true;
        } else if (d == 2) {
            double dt = det(h, 2);
            if (dt > 0 && h[0][0] > 0) {
                step[0] = (h[1][1] * g[0] - h[0][1] * g[1]) / dt;
                step[1] = (h[0][0] * g[1] - h[1][0] * g[0]) / dt;
                ok = true;
            }
        } else if (d == 3) {
            double dt = det(h, 3);
            if (dt > 0 && h[0][0] > 0 && det(h, 2) > 0) {
                for (int c = 0; c < 3; ++c) {
                    Mat hc = h;
                    for (int r = 0; r < 3; ++r) hc[r][c] = g[r];
                    step[c] = det(hc, 3) / dt;
                }
                ok = true;
            }
        }
        if (!ok) break;
        Vec y = x - step;
        double vy = phi.evaluate(y);
        if (!(vy <= best.value)) break;
        best = {vy, y};
        x = y;
        if (norm(step) < 1e-15) break;
    }
    return best;
}

PotentialField normalize_nonnegative(const PotentialField& phi) {
    auto mn = estimate_minimum(phi);
    return PotentialField(phi.dim(), phi.modes(), phi.shift() - mn.value);
}

}  // namespace kinpot
