#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hexamer/circuit.hpp"

using namespace hexamer;

namespace {

CircuitParams device_circuit() {
    CircuitParams p;
    p.drum_capacitance = 75.2e-15;
    p.stray_capacitance = 37.3e-15;
    p.self_inductance = 7.859e-9;
    p.mutual_m1 = 1.010e-9;
    p.mutual_m2 = 0.125e-9;
    p.mutual_m3 = 0.086e-9;
    p.site_feedline_rates = {hz_to_rad(4.45e6), hz_to_rad(2.24e6),
                             hz_to_rad(1.34e6), hz_to_rad(1.09e6)};
    return p;
}

// Independent oracle: diagonalize the circulant inductance matrix numerically
// and convert its eigenvalues to mode frequencies 1/sqrt(Ct * l).
std::array<double, 6> frequencies_by_diagonalization(const CircuitParams& p) {
    Eigen::Matrix<double, 6, 6> Lm;
    const double row[6] = {p.self_inductance, -p.mutual_m1, -p.mutual_m2,
                           -p.mutual_m3, -p.mutual_m2, -p.mutual_m1};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) Lm(i, j) = row[((j - i) % 6 + 6) % 6];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(Lm);
    std::array<double, 6> f{};
    for (int i = 0; i < 6; ++i)
        f[i] = 1.0 / std::sqrt(p.total_capacitance() * es.eigenvalues()(i));
    std::sort(f.begin(), f.end(), std::greater<>());
    return f;
}

}  // namespace

TEST_CASE("closed-form frequencies match numerical diagonalization") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uC(20e-15, 200e-15);
    std::uniform_real_distribution<double> uL(2e-9, 20e-9);
    std::uniform_real_distribution<double> uM(0.0, 0.12);
    for (int trial = 0; trial < 200; ++trial) {
        CircuitParams p;
        p.drum_capacitance = uC(rng);
        p.stray_capacitance = uC(rng);
        p.self_inductance = uL(rng);
        p.mutual_m1 = uM(rng) * p.self_inductance;
        p.mutual_m2 = uM(rng) * p.self_inductance;
        p.mutual_m3 = uM(rng) * p.self_inductance;
        auto modes = circuit_eigenmodes(p);
        auto oracle = frequencies_by_diagonalization(p);
        // the library orders by symmetry index, the oracle by magnitude;
        // compare the sorted spectra
        auto got = modes.frequencies;
        std::sort(got.begin(), got.end(), std::greater<>());
        for (int i = 0; i < 6; ++i)
            REQUIRE_THAT(got[i], Catch::Matchers::WithinRel(oracle[i], 1e-9));
    }
}

TEST_CASE("modeshapes are unitary and diagonalize the inductance matrix") {
    const auto p = device_circuit();
    auto modes = circuit_eigenmodes(p);
    const auto& U = modes.modeshapes;
    CHECK((U.adjoint() * U - Eigen::Matrix<cplx, 6, 6>::Identity()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::Matrix<double, 6, 6> Lm;
    const double row[6] = {p.self_inductance, -p.mutual_m1, -p.mutual_m2,
                           -p.mutual_m3, -p.mutual_m2, -p.mutual_m1};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) Lm(i, j) = row[((j - i) % 6 + 6) % 6];
    Eigen::Matrix<cplx, 6, 6> D = U.adjoint() * Lm.cast<cplx>() * U;
    for (int i = 0; i < 6; ++i) {
        const double l_i = 1.0 / (p.total_capacitance() *
                                  modes.frequencies[i] * modes.frequencies[i]);
        CHECK_THAT(D(i, i).real(), Catch::Matchers::WithinRel(l_i, 1e-12));
        for (int j = 0; j < 6; ++j)
            if (j != i) CHECK(std::abs(D(i, j)) < 1e-18);
    }

    // symmetric and anti-symmetric shapes, site-1 phase fixed real nonnegative
    for (int m = 0; m < 6; ++m) {
        CHECK_THAT(U(m, MicrowaveModeSet::auxiliary_index).real(),
                   Catch::Matchers::WithinRel(1.0 / std::sqrt(6.0), 1e-12));
        // site amplitudes alternate; global phase puts site 1 positive
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        CHECK_THAT(U(m, MicrowaveModeSet::primary_index).real(),
                   Catch::Matchers::WithinRel(sign / std::sqrt(6.0), 1e-12));
    }
    for (int c = 0; c < 6; ++c) {
        CHECK_THAT(U(0, c).imag(), Catch::Matchers::WithinAbs(0.0, 1e-15));
        CHECK(U(0, c).real() >= 0.0);
    }
}

TEST_CASE("device frequencies land on the measured bands") {
    auto modes = circuit_eigenmodes(device_circuit());
    // lowest (primary, anti-symmetric) at 4.814 GHz
    CHECK_THAT(rad_to_hz(modes.frequencies[5]),
               Catch::Matchers::WithinAbs(4.814e9, 1e6));
    // highest (auxiliary, symmetric) near 6.40 GHz
    CHECK_THAT(rad_to_hz(modes.frequencies[0]),
               Catch::Matchers::WithinAbs(6.40e9, 10e6));
    // the degenerate pairs sit between them
    CHECK(modes.frequencies[1] == modes.frequencies[2]);
    CHECK(modes.frequencies[3] == modes.frequencies[4]);
}

TEST_CASE("hopping couplings: exact values reproduce the spectrum") {
    const auto p = device_circuit();
    auto modes = circuit_eigenmodes(p);
    const double w0 = modes.omega0_exact;
    const double J1 = modes.j1_exact, J2 = modes.j2_exact, J3 = modes.j3_exact;
    CHECK_THAT(w0 + 2 * J1 + 2 * J2 + J3,
               Catch::Matchers::WithinRel(modes.frequencies[0], 1e-12));
    CHECK_THAT(w0 + J1 - J2 - J3,
               Catch::Matchers::WithinRel(modes.frequencies[1], 1e-12));
    CHECK_THAT(w0 - J1 - J2 + J3,
               Catch::Matchers::WithinRel(modes.frequencies[3], 1e-12));
    CHECK_THAT(w0 - 2 * J1 + 2 * J2 - J3,
               Catch::Matchers::WithinRel(modes.frequencies[5], 1e-12));

    // perturbative expressions track the exact ones; the neglected
    // second-order (M1/2L)^2 terms dominate the error for the small couplings
    CHECK_THAT(modes.omega0, Catch::Matchers::WithinRel(w0, 2e-2));
    CHECK_THAT(modes.j1, Catch::Matchers::WithinRel(J1, 5e-2));
    CHECK(std::abs(modes.j2 - J2) < 0.6 * J2);
    CHECK(std::abs(modes.j3 - J3) < 0.6 * J3);

    // nearest-neighbor coupling dominates; the quoted device value is 367 MHz
    CHECK_THAT(rad_to_hz(J1), Catch::Matchers::WithinAbs(367e6, 1e6));
}

TEST_CASE("feedline dressing conserves the trace and reproduces the mode rates") {
    const auto p = device_circuit();
    auto modes = circuit_eigenmodes(p);
    const auto site = p.site_rates();
    double site_sum = 0;
    for (double k : site) site_sum += k;
    double mode_sum = 0;
    for (double r : modes.feedline_rates) mode_sum += r;
    CHECK_THAT(mode_sum, Catch::Matchers::WithinRel(site_sum, 1e-12));

    // symmetric mode: fully constructive interference of the site amplitudes
    double z0 = 0;
    for (double k : site) z0 += std::sqrt(k);
    CHECK_THAT(modes.feedline_rates[0],
               Catch::Matchers::WithinRel(z0 * z0 / 6.0, 1e-12));
    // measured external rate of the symmetric mode is 11.94 MHz
    CHECK_THAT(rad_to_hz(modes.feedline_rates[0]),
               Catch::Matchers::WithinAbs(11.94e6, 0.05e6));
    // anti-symmetric mode: alternating signs
    double z3 = 0;
    for (int m = 1; m <= 6; ++m)
        z3 += std::sqrt(site[m - 1]) * ((m % 2 == 0) ? 1.0 : -1.0);
    CHECK_THAT(modes.feedline_rates[5],
               Catch::Matchers::WithinRel(z3 * z3 / 6.0, 1e-12));
    CHECK(modes.feedline_rates[5] < modes.feedline_rates[0] / 50.0);
}

TEST_CASE("split-mode reconstruction round trip over random systems") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uk(0.5e6, 6e6);
    std::uniform_real_distribution<double> uphi(0.05, two_pi - 0.05);
    int orbit_hits = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        std::array<double, 4> kap{hz_to_rad(uk(rng)), hz_to_rad(uk(rng)),
                                  hz_to_rad(uk(rng)), hz_to_rad(uk(rng))};
        const double phi = uphi(rng), phip = uphi(rng);
        auto rates = split_mode_forward_rates(kap, phi, phip);
        auto rec = reconstruct_split_modes(hz_to_rad(2 * 3e6), hz_to_rad(2 * 4e6), rates);
        REQUIRE(rec.converged);
        REQUIRE(!rec.candidates.empty());
        // best candidate reproduces the rate pattern
        auto model = split_mode_forward_rates(rec.candidates[0].site_rates,
                                              rec.candidates[0].phi,
                                              rec.candidates[0].phi_prime);
        for (int n = 0; n < 6; ++n)
            REQUIRE_THAT(model[n], Catch::Matchers::WithinRel(rates[n], 1e-6));
        // the true realization appears somewhere in the exact preimage set
        bool found = false;
        for (const auto& c : rec.candidates) {
            auto close = [](double a, double b) {
                double d = std::abs(a - b);
                d = std::min(d, two_pi - d);
                return d < 1e-6;
            };
            bool ok = close(c.phi, phi) && close(c.phi_prime, phip);
            for (int i = 0; i < 4; ++i)
                ok = ok && std::abs(c.site_rates[i] - kap[i]) < 1e-6 * kap[i];
            if (ok) found = true;
        }
        if (found) ++orbit_hits;
        REQUIRE(found);
        // recombined shapes stay orthonormal
        const auto& S = rec.candidates[0].modeshapes;
        REQUIRE((S.adjoint() * S - Eigen::Matrix<cplx, 6, 6>::Identity())
                    .cwiseAbs()
                    .maxCoeff() < 1e-12);
    }
    CHECK(orbit_hits == trials);
}

TEST_CASE("documented reconstruction example: phi=0.7, phi'=1.9") {
    std::array<double, 4> kap{hz_to_rad(4.45e6), hz_to_rad(2.24e6),
                              hz_to_rad(1.34e6), hz_to_rad(1.09e6)};
    auto rates = split_mode_forward_rates(kap, 0.7, 1.9);
    auto rec = reconstruct_split_modes(hz_to_rad(6e6), hz_to_rad(8e6), rates);
    REQUIRE(rec.converged);
    CHECK_FALSE(rec.phi_unidentifiable);
    // the true (phi, phi', kappa) tuple is one of the exact preimages
    bool found = false;
    for (const auto& c : rec.candidates) {
        bool ok = std::abs(c.phi - 0.7) < 1e-9 && std::abs(c.phi_prime - 1.9) < 1e-9;
        for (int i = 0; i < 4; ++i)
            ok = ok && std::abs(c.site_rates[i] - kap[i]) < 1e-9 * kap[i];
        if (ok) found = true;
    }
    CHECK(found);
    CHECK_THAT(rec.splitting_r, Catch::Matchers::WithinRel(hz_to_rad(3e6), 1e-12));
}

TEST_CASE("reconstruction flags the all-equal-rates degeneracy") {
    std::array<double, 4> kap{hz_to_rad(2e6), hz_to_rad(2e6), hz_to_rad(2e6),
                              hz_to_rad(2e6)};
    // with equal site rates the pair modes decouple from the feedline entirely
    auto rates = split_mode_forward_rates(kap, 1.0, 2.0);
    auto rec = reconstruct_split_modes(hz_to_rad(1e5), hz_to_rad(1e5), rates);
    CHECK(rec.phi_unidentifiable);
    REQUIRE(rec.converged);
    CHECK_THAT(rec.candidates[0].site_rates[0],
               Catch::Matchers::WithinRel(hz_to_rad(2e6), 1e-9));
}

TEST_CASE("reconstruction input validation") {
    std::array<double, 6> rates{1, 1, 1, 1, 1, 1};
    CHECK_THROWS_AS(reconstruct_split_modes(-1.0, 1.0, rates), config_error);
    rates[2] = -1.0;
    CHECK_THROWS_AS(reconstruct_split_modes(1.0, 1.0, rates), config_error);
    CHECK_THROWS_AS(
        reconstruct_split_modes(1.0, 1.0, std::array<double, 6>{0, 0, 0, 0, 0, 0}),
        config_error);
}

TEST_CASE("coupler cascade interference window") {
    CouplerCascade c;
    c.coupler_db = {10.0, 20.0};
    c.branch_loss_db = 2.0;

    c.branch_phase = 0.0;  // 2*phi = 0: destructive side
    const double low = 10 * std::log10(std::norm(coupler_cascade_s21(c)));
    CHECK_THAT(low, Catch::Matchers::WithinAbs(-36.06, 0.05));

    c.branch_phase = pi / 2;  // 2*phi = pi: constructive side
    const double high = 10 * std::log10(std::norm(coupler_cascade_s21(c)));
    CHECK_THAT(high, Catch::Matchers::WithinAbs(-24.14, 0.05));

    // everything in between stays inside the window and below unity
    for (int i = 0; i <= 100; ++i) {
        c.branch_phase = pi * i / 100.0;
        const cplx s = coupler_cascade_s21(c);
        REQUIRE(std::abs(s) <= 1.0);
        const double db = 10 * std::log10(std::norm(s));
        REQUIRE(db >= low - 1e-9);
        REQUIRE(db <= high + 1e-9);
    }
}

TEST_CASE("coupler cascade is a two-path interferometer in 1/S21") {
    // S21 = c1 c2 e^{i phi} / (1/eta + t1 t2 eta e^{2 i phi}): the inverse is
    // linear in e^{2 i phi}. Extract the two path amplitudes from two phases
    // and predict all the others.
    CouplerCascade c;
    c.coupler_db = {10.0, 20.0};
    c.branch_loss_db = 2.0;
    auto inv_rot = [&](double phi) {
        c.branch_phase = phi;
        return std::exp(cplx(0, phi)) / coupler_cascade_s21(c);
    };
    const cplx i0 = inv_rot(0.0), i1 = inv_rot(pi / 2);
    const cplx P = 0.5 * (i0 + i1);  // direct path
    const cplx Q = 0.5 * (i0 - i1);  // through-branch path
    for (int i = 0; i < 50; ++i) {
        const double phi = 0.013 + 6.2 * i / 50.0;
        const cplx model = P + Q * std::exp(cplx(0, 2 * phi));
        REQUIRE_THAT(std::abs(inv_rot(phi) - model),
                     Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    // closed-form path amplitudes
    const double eta = std::pow(10.0, -2.0 / 20.0);
    const double t1 = std::sqrt(1 - 0.1), t2 = std::sqrt(1 - 0.01);
    const double c1c2 = std::pow(10.0, -0.5) * std::pow(10.0, -1.0);
    CHECK_THAT(P.real(), Catch::Matchers::WithinRel(1.0 / eta / c1c2, 1e-12));
    CHECK_THAT(Q.real(), Catch::Matchers::WithinRel(t1 * t2 * eta / c1c2, 1e-12));

    // |S21| is pi-periodic in the branch phase
    c.branch_phase = 0.37;
    const double a = std::abs(coupler_cascade_s21(c));
    c.branch_phase = 0.37 + pi;
    CHECK_THAT(std::abs(coupler_cascade_s21(c)), Catch::Matchers::WithinRel(a, 1e-12));

    CouplerCascade bad;
    bad.coupler_db = {10.0};
    CHECK_THROWS_AS(coupler_cascade_s21(bad), config_error);
}
