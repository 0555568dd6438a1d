#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "device_fixture.hpp"
#include "hexamer/dynamics.hpp"

using namespace hexamer;

TEST_CASE("dynamical matrix layout") {
    auto mech = fixture::device_mechanics();
    auto cav = fixture::device_cavity();
    auto pump = PumpContext::from_photon_number(mech, hz_to_rad(1.991e6), 1e6);
    auto M = dynamical_matrix(mech, cav, pump);
    REQUIRE(M.rows() == 7);
    CHECK(M(0, 0) == cplx(-cav.kappa() / 2.0, -pump.detuning));
    for (int i = 0; i < 6; ++i) {
        CHECK(M(i + 1, i + 1) ==
              cplx(-mech.gamma_m[i] / 2.0, -mech.omega_m[i]));
        CHECK(M(0, i + 1) == cplx(0.0, -pump.g[i]));
        CHECK(M(i + 1, 0) == cplx(0.0, -pump.g[i]));
        for (int j = 0; j < 6; ++j)
            if (i != j) CHECK(M(i + 1, j + 1) == cplx(0.0, 0.0));
    }

    PumpContext bad = pump;
    bad.g.pop_back();
    CHECK_THROWS_AS(dynamical_matrix(mech, cav, bad), config_error);
}

TEST_CASE("reflection equals the resolvent of the dynamical matrix") {
    // Independent oracle: S11(w) = 1 - kappa_ex e0^T (-i w I - M)^{-1} e0,
    // evaluated by a direct linear solve.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        MechanicalParams mech;
        CavityParams cav;
        PumpContext pump;
        fixture::random_system(rng, 1 + std::size_t(u(rng) * 8), mech, cav, pump);
        auto M = dynamical_matrix(mech, cav, pump);
        const int dim = int(M.rows());
        for (int k = 0; k < 6; ++k) {
            const double w = mech.omega_m[0] * (1.0 + 0.01 * (u(rng) - 0.5));
            Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(dim);
            e0(0) = 1.0;
            Eigen::MatrixXcd A =
                cplx(0.0, -w) * Eigen::MatrixXcd::Identity(dim, dim) - M;
            const cplx oracle = 1.0 - cav.kappa_ex * (e0.transpose() * A.lu().solve(e0))(0);
            const cplx direct = omit_reflection(w, mech, cav, pump);
            REQUIRE(std::abs(direct - oracle) < 1e-10 * std::max(1.0, std::abs(oracle)));
        }
    }
}

TEST_CASE("direct and collective-basis reflection agree") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        MechanicalParams mech;
        CavityParams cav;
        PumpContext pump;
        fixture::random_system(rng, 6, mech, cav, pump);
        auto modes = collective_eigenmodes(dynamical_matrix(mech, cav, pump));
        std::vector<double> grid = linspace(mech.omega_m[0] * 0.995,
                                            mech.omega_m[0] * 1.005, 41);
        auto a = omit_reflection(grid, mech, cav, pump);
        auto b = omit_reflection_collective(grid, modes, cav.kappa_ex);
        for (std::size_t i = 0; i < grid.size(); ++i)
            REQUIRE(std::abs(a.value[i] - b.value[i]) < 1e-9);
    }
}

TEST_CASE("single-oscillator reflection has the textbook window shape") {
    MechanicalParams mech;
    mech.omega_m = {hz_to_rad(2e6)};
    mech.gamma_m = {hz_to_rad(1.0)};
    mech.g0 = {hz_to_rad(1.3)};
    CavityParams cav = fixture::device_cavity();
    auto pump = PumpContext::from_photon_number(mech, mech.omega_m[0], 4e6);

    // exactly on the mechanical resonance the effective damping is
    // Gamma_m (1 + C) and the dip depth follows the modified denominator
    const double C = pump.cooperativity(mech, cav);
    const cplx on_res = omit_reflection(mech.omega_m[0], mech, cav, pump);
    const cplx expected =
        1.0 - cav.kappa_ex /
                  (cav.kappa() / 2.0 + 2.0 * pump.g[0] * pump.g[0] / mech.gamma_m[0]);
    CHECK(std::abs(on_res - expected) < 1e-10);
    CHECK(C > 1.0);

    // far off resonance the probe sees the bare cavity
    // (up to the slowly decaying mechanical tail ~ g^2/detuning)
    const cplx far = omit_reflection(mech.omega_m[0] + 300.0 * cav.kappa(), mech, cav, pump);
    const cplx bare = 1.0 - cav.kappa_ex * chi_cavity(mech.omega_m[0] + 300.0 * cav.kappa(),
                                                      cav, pump.detuning);
    CHECK(std::abs(far - bare) < 1e-8);
}

TEST_CASE("weak-coupling bright mode damping follows the rate formula") {
    auto mech = fixture::device_mechanics_equal_g();
    // make the mechanics degenerate so the collective mode is exact
    for (auto& w : mech.omega_m) w = hz_to_rad(1.991e6);
    for (auto& gm : mech.gamma_m) gm = hz_to_rad(0.212);
    auto cav = fixture::device_cavity();
    const double kappa = cav.kappa();
    for (double np : {1e3, 1e4, 1e5}) {
        auto pump = PumpContext::from_photon_number(mech, mech.omega_m[0], np);
        auto modes = collective_eigenmodes(dynamical_matrix(mech, cav, pump));
        const int bright = bright_mode_index(modes, pump);
        REQUIRE(bright >= 0);
        const double g = pump.g[0];
        const double expected = mech.gamma_m[0] + 6.0 * 4.0 * g * g / kappa;
        CHECK_THAT(modes.modes[bright].linewidth,
                   Catch::Matchers::WithinRel(expected, 1e-2));
    }
}

TEST_CASE("strong coupling: hybridized doublet at kappa/2 split by 2 g_col") {
    auto mech = fixture::device_mechanics_equal_g();
    for (auto& w : mech.omega_m) w = hz_to_rad(1.991e6);
    auto cav = fixture::device_cavity();
    const double kappa = cav.kappa();
    // g sqrt(6) / kappa = 5
    const double g_target = 5.0 * kappa / std::sqrt(6.0);
    const double np = std::pow(g_target / mech.g0[0], 2);
    auto pump = PumpContext::from_photon_number(mech, mech.omega_m[0], np);
    auto modes = collective_eigenmodes(dynamical_matrix(mech, cav, pump));

    // the two broadest modes are the polariton doublet
    const auto& m0 = modes.modes[0];
    const auto& m1 = modes.modes[1];
    CHECK_THAT(m0.linewidth, Catch::Matchers::WithinRel(kappa / 2.0, 0.05));
    CHECK_THAT(m1.linewidth, Catch::Matchers::WithinRel(kappa / 2.0, 0.05));
    const double split = std::abs(m0.frequency - m1.frequency);
    CHECK_THAT(split, Catch::Matchers::WithinRel(2.0 * g_target * std::sqrt(6.0), 0.02));
}

TEST_CASE("collective metrics: xi spans 1 to N with pump power") {
    auto mech = fixture::device_mechanics_equal_g();
    auto cav = fixture::device_cavity();
    // low power: modes localize on individual oscillators, xi ~ 1
    auto pump_lo = PumpContext::from_photon_number(mech, hz_to_rad(1.991e6), 1.0);
    auto met_lo = collective_coupling_metrics(
        collective_eigenmodes(dynamical_matrix(mech, cav, pump_lo)), pump_lo);
    CHECK_THAT(met_lo.enhancement_xi, Catch::Matchers::WithinAbs(1.0, 0.02));

    // high power: fully collective, xi -> N
    auto pump_hi = PumpContext::from_photon_number(mech, hz_to_rad(1.991e6), 1e8);
    auto met_hi = collective_coupling_metrics(
        collective_eigenmodes(dynamical_matrix(mech, cav, pump_hi)), pump_hi);
    CHECK(met_hi.enhancement_xi > 5.9);
    CHECK(met_hi.enhancement_xi <= 6.0 + 1e-9);
    // residual mechanical-frequency spread keeps the overlap slightly below
    // the fully symmetric limit
    CHECK_THAT(met_hi.g_col,
               Catch::Matchers::WithinRel(std::sqrt(6.0) * pump_hi.g[0], 1e-2));
}

TEST_CASE("regime thresholds for the measured device") {
    auto t = regime_thresholds(hz_to_rad(28e3), hz_to_rad(1.3), hz_to_rad(2.83e3), 6);
    CHECK_THAT(t.n_individual_to_collective,
               Catch::Matchers::WithinRel(1.95e6, 5e-3));
    CHECK_THAT(t.n_collective_to_strong,
               Catch::Matchers::WithinRel(1.93e7, 5e-3));
    CHECK_THROWS_AS(regime_thresholds(0.0, 1.0, 1.0, 6), config_error);
}

TEST_CASE("defective dynamical matrix is rejected") {
    // two-level exceptional point: g = (kappa - Gamma)/4 exactly
    MechanicalParams mech;
    mech.omega_m = {hz_to_rad(1e6)};
    mech.gamma_m = {hz_to_rad(10.0)};
    mech.g0 = {1.0};
    CavityParams cav;
    cav.kappa_ex = hz_to_rad(50e3);
    cav.kappa_0 = hz_to_rad(10e3);
    cav.omega_c = hz_to_rad(5e9);
    PumpContext pump;
    pump.detuning = mech.omega_m[0];
    pump.photon_number = 1.0;
    pump.g = {(cav.kappa() - mech.gamma_m[0]) / 4.0};
    CHECK_THROWS_AS(collective_eigenmodes(dynamical_matrix(mech, cav, pump)),
                    numerical_error);
}

TEST_CASE("validation of the parameter structs") {
    MechanicalParams m;
    CHECK_THROWS_AS(m.validate(), config_error);
    m.omega_m = {1.0};
    m.gamma_m = {1.0, 2.0};
    m.g0 = {0.1};
    CHECK_THROWS_AS(m.validate(), config_error);
    CavityParams c;
    CHECK_THROWS_AS(c.validate(), config_error);
    MechanicalParams ok;
    ok.omega_m = {1.0};
    ok.gamma_m = {0.1};
    ok.g0 = {0.01};
    CHECK_THROWS_AS(PumpContext::from_photon_number(ok, 0.0, -1.0), config_error);
}
