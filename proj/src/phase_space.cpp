#include "kinpot/phase_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "kinpot/errors.hpp"

namespace kinpot {

double maxwellian_tail_mass(int d_v, double v_max) {
    double inside = 1.0 - std::erfc(v_max / std::sqrt(2.0));
    return 1.0 - std::pow(inside, d_v);
}

PhaseGrid::PhaseGrid(int d_x, int d_v, int nx, int nv, double v_max, double tail_tol)
    : d_x_(d_x), d_v_(d_v), nx_(nx), nv_(nv), v_max_(v_max), tail_tol_(tail_tol) {
    if (d_x < 1 || d_x > 3) throw ContractError("d_x must be 1, 2 or 3");
    if (d_v < 2 || d_v > 3) throw ContractError("d_v must be 2 or 3");
    if (d_x > d_v) throw ContractError("d_x must not exceed d_v");
    if (nx < 4) throw ContractError("nx must be at least 4");
    if (nv < 8) throw ContractError("nv must be at least 8");
    if (!(v_max > 0)) throw ContractError("v_max must be positive");
    double tail = maxwellian_tail_mass(d_v, v_max);
    if (tail > tail_tol)
        throw ContractError("Maxwellian tail mass " + std::to_string(tail) + " outside the velocity box exceeds tail_tol " +
                            std::to_string(tail_tol) + "; increase v_max");

    n_x_cells_ = 1;
    for (int i = 0; i < d_x; ++i) n_x_cells_ *= nx;
    n_v_cells_ = 1;
    for (int i = 0; i < d_v; ++i) n_v_cells_ *= nv;
    x_weight_ = std::pow(1.0 / nx, d_x);

    const double h = hv();
    std::vector<double> w1(nv, h);
    w1.front() = w1.back() = 0.5 * h;
    v_weights_.resize(n_v_cells_);
    v_nodes_.resize(n_v_cells_);
    for (std::size_t iv = 0; iv < n_v_cells_; ++iv) {
        std::size_t r = iv;
        double w = 1.0;
        Vec v{};
        for (int a = d_v - 1; a >= 0; --a) {
            int j = static_cast<int>(r % nv);
            r /= nv;
            v[a] = v_axis(j);
            w *= w1[j];
        }
        v_weights_[iv] = w;
        v_nodes_[iv] = v;
    }
}

Vec PhaseGrid::x_node(std::size_t ix) const {
    Vec x{};
    for (int a = d_x_ - 1; a >= 0; --a) {
        x[a] = static_cast<double>(ix % nx_) / nx_;
        ix /= nx_;
    }
    return x;
}

Vec PhaseGrid::v_node(std::size_t iv) const { return v_nodes_[iv]; }

double PhaseGrid::v_box_volume() const { return std::pow(2.0 * v_max_, d_v_); }

const char* kind_name(FieldKind k) {
    switch (k) {
        case FieldKind::F: return "F";
        case FieldKind::f: return "f";
        case FieldKind::h: return "h";
    }
    return "?";
}

FieldKind kind_from_name(const std::string& s) {
    if (s == "F") return FieldKind::F;
    if (s == "f") return FieldKind::f;
    if (s == "h") return FieldKind::h;
    throw ContractError("unknown field kind '" + s + "'");
}

DistributionField::DistributionField(PhaseGrid g, FieldKind k) : grid(std::move(g)), values(grid.size(), 0.0), kind(k) {}

DistributionField::DistributionField(PhaseGrid g, std::vector<double> v, FieldKind k)
    : grid(std::move(g)), values(std::move(v)), kind(k) {
    if (values.size() != grid.size()) throw ContractError("field size does not match grid");
}

void DistributionField::validate(double tol_pos) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw ContractError("non-finite field value at node " + std::to_string(i));
        if (kind == FieldKind::F && values[i] < -tol_pos)
            throw ContractError("negative density at node " + std::to_string(i));
    }
}

double maxwellian_mu(const Vec& v) { return std::exp(-0.5 * norm2(v)); }

double local_maxwellian_mu_E(const PotentialField& phi, const Vec& x, const Vec& v) {
    return maxwellian_mu(v) * std::exp(-phi.evaluate(x));
}

double weight_w_beta(const WeightParams& p, const PotentialField& phi, const Vec& x, const Vec& v) {
    return std::pow(0.5 * norm2(v) + phi.evaluate(x) + 1.0, 0.5 * p.beta);
}

NodeTables node_tables(const PhaseGrid& g, const PotentialField& phi, const WeightParams& p) {
    NodeTables t;
    const std::size_t NX = g.n_x_cells(), NV = g.n_v_cells();
    t.phi_x.resize(NX);
    t.mu_v.resize(NV);
    for (std::size_t ix = 0; ix < NX; ++ix) t.phi_x[ix] = phi.evaluate(g.x_node(ix));
    for (std::size_t iv = 0; iv < NV; ++iv) t.mu_v[iv] = maxwellian_mu(g.v_node(iv));
    t.mu_E.resize(g.size());
    t.sqrt_mu_E.resize(g.size());
    t.w.resize(g.size());
    for (std::size_t ix = 0; ix < NX; ++ix) {
        double e = std::exp(-t.phi_x[ix]);
        for (std::size_t iv = 0; iv < NV; ++iv) {
            std::size_t n = g.index(ix, iv);
            const Vec& v = g.v_nodes()[iv];
            t.mu_E[n] = t.mu_v[iv] * e;
            t.sqrt_mu_E[n] = std::exp(-0.25 * norm2(v) - 0.5 * t.phi_x[ix]);
            t.w[n] = std::pow(0.5 * norm2(v) + t.phi_x[ix] + 1.0, 0.5 * p.beta);
        }
    }
    return t;
}

Perturbation perturbation_from_F(const DistributionField& F, const PotentialField& phi, const WeightParams& p) {
    if (F.kind != FieldKind::F) throw ContractError("perturbation_from_F expects a density field");
    F.validate();
    auto t = node_tables(F.grid, phi, p);
    Perturbation out{DistributionField(F.grid, FieldKind::f), DistributionField(F.grid, FieldKind::h)};
    for (std::size_t n = 0; n < F.values.size(); ++n) {
        double f = (F.values[n] - t.mu_E[n]) / t.sqrt_mu_E[n];
        out.f.values[n] = f;
        out.h.values[n] = t.w[n] * f;
    }
    return out;
}

DistributionField F_from_perturbation(const DistributionField& f, const PotentialField& phi) {
    if (f.kind != FieldKind::f) throw ContractError("F_from_perturbation expects kind f");
    auto t = node_tables(f.grid, phi, WeightParams{0.0});
    DistributionField F(f.grid, FieldKind::F);
    for (std::size_t n = 0; n < f.values.size(); ++n) F.values[n] = t.mu_E[n] + t.sqrt_mu_E[n] * f.values[n];
    return F;
}

DistributionField h_from_f(const DistributionField& f, const PotentialField& phi, const WeightParams& p) {
    auto t = node_tables(f.grid, phi, p);
    DistributionField h(f.grid, FieldKind::h);
    for (std::size_t n = 0; n < f.values.size(); ++n) h.values[n] = t.w[n] * f.values[n];
    return h;
}

DistributionField f_from_h(const DistributionField& h, const PotentialField& phi, const WeightParams& p) {
    auto t = node_tables(h.grid, phi, p);
    DistributionField f(h.grid, FieldKind::f);
    for (std::size_t n = 0; n < h.values.size(); ++n) f.values[n] = h.values[n] / t.w[n];
    return f;
}

double wrap_unit(double x) {
    double y = x - std::floor(x);
    return y >= 1.0 ? 0.0 : y;
}

namespace {
// Queries that land on a node up to rounding are treated as exact hits.
double snap(double s) {
    double r = std::nearbyint(s);
    return std::abs(s - r) < 1e-11 ? r : s;
}
}  // namespace

VelocityCell locate_velocity(const PhaseGrid& g, const Vec& v) {
    VelocityCell c;
    const double h = g.hv();
    const int nv = g.nv();
    for (int a = 0; a < g.d_v(); ++a) {
        double s = snap((v[a] + g.v_max()) / h);
        if (!(s >= 0.0) || s > nv - 1) {
            c.outside = true;
            return c;
        }
        int j = std::min(static_cast<int>(s), nv - 2);
        c.lo[a] = j;
        c.frac[a] = s - j;
    }
    return c;
}

double interpolate_velocity(const PhaseGrid& g, const double* slice, const VelocityCell& c) {
    const int nv = g.nv();
    if (g.d_v() == 2) {
        std::size_t b = static_cast<std::size_t>(c.lo[0]) * nv + c.lo[1];
        double t0 = c.frac[0], t1 = c.frac[1];
        return (1 - t0) * ((1 - t1) * slice[b] + t1 * slice[b + 1]) +
               t0 * ((1 - t1) * slice[b + nv] + t1 * slice[b + nv + 1]);
    }
    std::size_t b = (static_cast<std::size_t>(c.lo[0]) * nv + c.lo[1]) * nv + c.lo[2];
    const std::size_t s1 = nv, s0 = static_cast<std::size_t>(nv) * nv;
    double t0 = c.frac[0], t1 = c.frac[1], t2 = c.frac[2];
    auto lerp2 = [&](std::size_t q) {
        return (1 - t1) * ((1 - t2) * slice[q] + t2 * slice[q + 1]) + t1 * ((1 - t2) * slice[q + s1] + t2 * slice[q + s1 + 1]);
    };
    return (1 - t0) * lerp2(b) + t0 * lerp2(b + s0);
}

Stencil make_stencil(const PhaseGrid& g, const Vec& x, const Vec& v) {
    Stencil s;
    const int nx = g.nx();
    for (int a = 0; a < g.d_x(); ++a) {
        double p = snap(wrap_unit(x[a]) * nx);
        int j = static_cast<int>(p);
        if (j >= nx) {
            j = 0;
            p = 0.0;
        }
        s.x_lo[a] = j;
        s.x_hi[a] = (j + 1) % nx;
        s.x_frac[a] = p - j;
    }
    auto c = locate_velocity(g, v);
    s.outside_v = c.outside;
    s.v_lo = c.lo;
    s.v_frac = c.frac;
    return s;
}

double apply_stencil(const PhaseGrid& g, const double* values, const Stencil& s) {
    const std::size_t NV = g.n_v_cells();
    const int dx = g.d_x(), nx = g.nx();
    VelocityCell c{s.v_lo, s.v_frac, false};
    double acc = 0.0;
    const int corners = 1 << dx;
    for (int m = 0; m < corners; ++m) {
        double w = 1.0;
        std::size_t ix = 0;
        for (int a = 0; a < dx; ++a) {
            bool hi = (m >> a) & 1;
            w *= hi ? s.x_frac[a] : 1.0 - s.x_frac[a];
            ix = ix * nx + (hi ? s.x_hi[a] : s.x_lo[a]);
        }
        if (w == 0.0) continue;
        acc += w * interpolate_velocity(g, values + ix * NV, c);
    }
    return acc;
}

double interpolate(const DistributionField& field, const Vec& x, const Vec& v, const PotentialField& phi) {
    auto s = make_stencil(field.grid, x, v);
    if (s.outside_v) return field.kind == FieldKind::F ? local_maxwellian_mu_E(phi, x, v) : 0.0;
    return apply_stencil(field.grid, field.values.data(), s);
}

double interpolate(const DistributionField& field, const Vec& x, const Vec& v) {
    if (field.kind == FieldKind::F) throw ContractError("density interpolation needs the potential for its extension");
    return interpolate(field, x, v, PotentialField());
}

double norm_l2(const DistributionField& f) {
    const auto& g = f.grid;
    double s = 0.0;
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            double y = f.at(ix, iv);
            s += y * y * g.v_weight(iv);
        }
    return std::sqrt(s * g.x_weight());
}

double norm_weighted_linf(const DistributionField& h) {
    double m = 0.0;
    for (double y : h.values) m = std::max(m, std::abs(y));
    return m;
}

double small_velocity_moment(const DistributionField& f, std::size_t x_cell) {
    const auto& g = f.grid;
    double s = 0.0;
    for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv)
        s += g.v_weight(iv) * std::exp(-0.125 * norm2(g.v_nodes()[iv])) * std::abs(f.at(x_cell, iv));
    return s;
}

void write_snapshot(const std::string& stem, const DistributionField& field, const SnapshotMeta& meta) {
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot open " + stem + ".bin for writing");
    for (double y : field.values) {
        auto bits = std::bit_cast<std::uint64_t>(y);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        bin.write(reinterpret_cast<const char*>(&bits), 8);
    }
    std::ofstream m(stem + ".meta");
    const auto& g = field.grid;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", g.v_max());
    m << "d_x = " << g.d_x() << "\nd_v = " << g.d_v() << "\nnx = " << g.nx() << "\nnv = " << g.nv()
      << "\nv_max = " << buf << "\nkind = " << kind_name(field.kind);
    std::snprintf(buf, sizeof buf, "%.17g", meta.time);
    m << "\ntime = " << buf << "\nconfig_hash = " << meta.config_hash << "\norder = x-major v-minor\n";
}

DistributionField read_snapshot(const std::string& stem) {
    std::ifstream m(stem + ".meta");
    if (!m) throw Error("cannot open " + stem + ".meta");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(m, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(' '));
            s.erase(s.find_last_not_of(' ') + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    PhaseGrid g(std::stoi(kv.at("d_x")), std::stoi(kv.at("d_v")), std::stoi(kv.at("nx")), std::stoi(kv.at("nv")),
                std::stod(kv.at("v_max")), 1.0);
    DistributionField f(g, kind_from_name(kv.at("kind")));
    std::ifstream bin(stem + ".bin", std::ios::binary);
    for (auto& y : f.values) {
        std::uint64_t bits;
        bin.read(reinterpret_cast<char*>(&bits), 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        y = std::bit_cast<double>(bits);
    }
    if (!bin) throw Error("snapshot " + stem + ".bin is truncated");
    return f;
}

}  // namespace kinpot
