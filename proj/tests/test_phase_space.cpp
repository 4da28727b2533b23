#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kinpot/errors.hpp"
#include "kinpot/phase_space.hpp"

using namespace kinpot;

namespace {
PotentialField cos_field(double amp) { return PotentialField(1, {{{0, 0, 0}, amp, 0.0}, {{1, 0, 0}, -amp, 0.0}}); }
}  // namespace

TEST_CASE("Maxwellians and weight") {
    CHECK(maxwellian_mu({0, 0, 0}) == 1.0);
    CHECK(maxwellian_mu({1, 1, 0}) == doctest::Approx(std::exp(-1.0)));
    CHECK(maxwellian_mu({0.3, -1.2, 0.7}) == maxwellian_mu({-0.3, 1.2, -0.7}));

    PotentialField zero(1, {});
    CHECK(local_maxwellian_mu_E(zero, {0.2, 0, 0}, {0.5, 0.1, 0}) == maxwellian_mu({0.5, 0.1, 0}));
    PotentialField ln2(1, {}, std::log(2.0));
    CHECK(local_maxwellian_mu_E(ln2, {0.4, 0, 0}, {0, 0, 0}) == doctest::Approx(0.5));
    auto phi = cos_field(0.7);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int i = 0; i < 20; ++i) {
        Vec x{std::abs(U(rng)) / 3, 0, 0}, v{U(rng), U(rng), U(rng)};
        double direct = std::exp(-0.5 * norm2(v)) * std::exp(-phi.evaluate(x));
        CHECK(std::abs(local_maxwellian_mu_E(phi, x, v) - direct) <= 4e-15 * direct + 1e-300);
    }

    CHECK(weight_w_beta({4.0}, zero, {0, 0, 0}, {0, 0, 0}) == 1.0);
    PotentialField one(1, {}, 1.0);
    CHECK(weight_w_beta({4.0}, one, {0.1, 0, 0}, {1, 1, 0}) == doctest::Approx(9.0));
    CHECK(weight_w_beta({0.0}, phi, {0.3, 0, 0}, {2, 1, 0}) == 1.0);
}

TEST_CASE("grid construction and tail admissibility") {
    PhaseGrid g(1, 2, 8, 16, 6.0);
    CHECK(g.n_x_cells() == 8);
    CHECK(g.n_v_cells() == 256);
    double ws = 0;
    for (double w : g.v_weights()) ws += w;
    CHECK(ws == doctest::Approx(g.v_box_volume()).epsilon(1e-13));
    CHECK_THROWS_AS(PhaseGrid(1, 2, 8, 16, 3.0), ContractError);
    CHECK_THROWS_AS(PhaseGrid(1, 2, 3, 16, 6.0), ContractError);
    CHECK_THROWS_AS(PhaseGrid(1, 2, 8, 7, 6.0), ContractError);
    CHECK_THROWS_AS(PhaseGrid(3, 2, 8, 8, 6.0), ContractError);
    CHECK_THROWS_AS(PhaseGrid(1, 1, 8, 8, 6.0), ContractError);
}

TEST_CASE("perturbation round trip") {
    PhaseGrid g(1, 2, 6, 10, 6.0);
    auto phi = cos_field(0.5);
    WeightParams wp{4.0};
    auto t = node_tables(g, phi, wp);

    DistributionField eq(g, t.mu_E, FieldKind::F);
    auto p0 = perturbation_from_F(eq, phi, wp);
    for (double y : p0.f.values) CHECK(y == 0.0);
    for (double y : p0.h.values) CHECK(y == 0.0);

    DistributionField two(g, FieldKind::F);
    for (std::size_t n = 0; n < g.size(); ++n) two.values[n] = 2 * t.mu_E[n];
    auto p2 = perturbation_from_F(two, phi, wp);
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(p2.f.values[n] == doctest::Approx(t.sqrt_mu_E[n]).epsilon(1e-13));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, 2);
    DistributionField F(g, FieldKind::F);
    for (std::size_t n = 0; n < g.size(); ++n) F.values[n] = U(rng) * t.mu_E[n] + 1e-3 * U(rng);
    auto p = perturbation_from_F(F, phi, wp);
    auto back = F_from_perturbation(p.f, phi);
    for (std::size_t n = 0; n < g.size(); ++n)
        if (t.mu_E[n] > 1e-300) CHECK(std::abs(back.values[n] - F.values[n]) <= 1e-12 * std::abs(F.values[n]));
    for (double w : t.w) CHECK(w >= 1.0);

    DistributionField bad(g, FieldKind::F);
    bad.values[3] = std::nan("");
    CHECK_THROWS_AS(perturbation_from_F(bad, phi, wp), ContractError);
}

TEST_CASE("interpolation reproduces nodes and affine fields") {
    PhaseGrid g(2, 2, 5, 9, 6.0);
    PotentialField zero(2, {});
    DistributionField c(g, FieldKind::f), lin(g, FieldKind::h), aff(g, FieldKind::f);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1, 1);
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) {
            Vec v = g.v_node(iv);
            c.at(ix, iv) = 3.25;
            lin.at(ix, iv) = 0.7 * v[0] - 0.1;
            aff.at(ix, iv) = U(rng);
        }
    for (std::size_t ix = 0; ix < g.n_x_cells(); ix += 3)
        for (std::size_t iv = 0; iv < g.n_v_cells(); iv += 7)
            CHECK(interpolate(aff, g.x_node(ix), g.v_node(iv)) == aff.at(ix, iv));
    for (int t = 0; t < 50; ++t) {
        Vec x{0.5 * (U(rng) + 1), 0.5 * (U(rng) + 1), 0}, v{5.9 * U(rng), 5.9 * U(rng), 0};
        CHECK(interpolate(c, x, v) == doctest::Approx(3.25).epsilon(1e-14));
        CHECK(interpolate(lin, x, v) == doctest::Approx(0.7 * v[0] - 0.1).epsilon(1e-13));
    }
    CHECK(interpolate(c, {0.1, 0.1, 0}, {6.5, 0, 0}) == 0.0);
    DistributionField F(g, FieldKind::F);
    auto phi = PotentialField(2, {{{0, 1, 0}, 0.3, 0.0}}, 0.3);
    CHECK(interpolate(F, {0.1, 0.2, 0}, {0, -7, 0}, phi) == doctest::Approx(local_maxwellian_mu_E(phi, {0.1, 0.2, 0}, {0, -7, 0})));
    CHECK_THROWS_AS(interpolate(F, {0.1, 0.2, 0}, {0, 0, 0}), ContractError);
}

TEST_CASE("norms and the small velocity moment") {
    PhaseGrid g(1, 2, 4, 12, 6.0);
    DistributionField f(g, FieldKind::f);
    CHECK(norm_l2(f) == 0.0);
    for (auto& y : f.values) y = 1.0;
    CHECK(norm_l2(f) == doctest::Approx(std::sqrt(g.v_box_volume())).epsilon(1e-13));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> N;
    for (auto& y : f.values) y = N(rng);
    double s = 0;
    for (std::size_t ix = 0; ix < g.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g.n_v_cells(); ++iv) s += f.at(ix, iv) * f.at(ix, iv) * g.x_weight() * g.v_weight(iv);
    CHECK(norm_l2(f) == doctest::Approx(std::sqrt(s)).epsilon(1e-13));
    DistributionField f3(g, f.values, FieldKind::f);
    for (auto& y : f3.values) y *= -3.0;
    CHECK(norm_l2(f3) == doctest::Approx(3 * norm_l2(f)).epsilon(1e-14));

    DistributionField h(g, FieldKind::h);
    CHECK(norm_weighted_linf(h) == 0.0);
    h.values[17] = -5.0;
    CHECK(norm_weighted_linf(h) == 5.0);

    // Separable 1-D trapezoid oracle.
    PhaseGrid g3(1, 3, 4, 14, 6.0);
    DistributionField one(g3, FieldKind::f), half(g3, FieldKind::f);
    for (std::size_t ix = 0; ix < g3.n_x_cells(); ++ix)
        for (std::size_t iv = 0; iv < g3.n_v_cells(); ++iv) {
            one.at(ix, iv) = 1.0;
            half.at(ix, iv) = std::exp(-0.25 * norm2(g3.v_node(iv)));
        }
    auto axis = [&](double a) {
        double s = 0;
        for (int j = 0; j < g3.nv(); ++j) {
            double v = g3.v_axis(j);
            double w = (j == 0 || j == g3.nv() - 1) ? 0.5 * g3.hv() : g3.hv();
            s += w * std::exp(-a * v * v);
        }
        return s;
    };
    CHECK(small_velocity_moment(one, 1) == doctest::Approx(std::pow(axis(0.125), 3)).epsilon(1e-13));
    CHECK(small_velocity_moment(half, 2) == doctest::Approx(std::pow(axis(0.375), 3)).epsilon(1e-13));
    DistributionField zero(g3, FieldKind::f);
    CHECK(small_velocity_moment(zero, 0) == 0.0);
}

TEST_CASE("snapshot round trip") {
    PhaseGrid g(1, 2, 4, 8, 6.0);
    DistributionField h(g, FieldKind::h);
    for (std::size_t n = 0; n < g.size(); ++n) h.values[n] = std::sin(0.37 * n) * 1e-3;
    auto dir = std::filesystem::temp_directory_path() / "kinpot_snap_test";
    std::filesystem::create_directories(dir);
    std::string stem = (dir / "s0").string();
    write_snapshot(stem, h, {1.25, "abc"});
    auto back = read_snapshot(stem);
    CHECK(back.kind == FieldKind::h);
    CHECK(back.grid == g);
    CHECK(back.values == h.values);
    CHECK(std::filesystem::file_size(stem + ".bin") == 8 * g.size());
    std::filesystem::remove_all(dir);
}
