#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "device_fixture.hpp"
#include "hexamer/ringdown.hpp"

using namespace hexamer;

TEST_CASE("synthesis validation") {
    RingdownComponent c{1.0, 0.0, 1.0, 0.1};
    CHECK_THROWS_AS(synthesize_ringdown({c}, -1.0, 100), config_error);
    c.omega = 1e9;  // beyond Nyquist for dt = 1
    CHECK_THROWS_AS(synthesize_ringdown({c}, 1.0, 100), config_error);
    c.omega = 1.0;
    c.rate = 0.0;
    CHECK_THROWS_AS(synthesize_ringdown({c}, 1.0, 100), config_error);
}

TEST_CASE("dft of a single tone follows the geometric-sum closed form") {
    RingdownComponent c{2.5, 0.7, hz_to_rad(3e3), hz_to_rad(12.0)};
    const double dt = 1.0 / 50e3;
    const std::size_t K = 20000;
    auto rec = synthesize_ringdown({c}, dt, K);
    for (double w : {c.omega, c.omega + hz_to_rad(5.0), c.omega - hz_to_rad(40.0)}) {
        const cplx q = std::exp(cplx(-c.rate / 2.0, w - c.omega) * dt);
        const cplx expect = c.amplitude * std::exp(cplx(0.0, c.phase)) * dt *
                            (1.0 - std::pow(q, double(K))) / (1.0 - q);
        const cplx got = ringdown_dft(rec, w);
        REQUIRE(std::abs(got - expect) < 1e-12 * std::abs(expect) + 1e-15);
    }
}

TEST_CASE("fft matches the slow transform and preserves energy") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 256;
    RingdownRecord rec;
    rec.dt = 1.0;
    for (std::size_t i = 0; i < n; ++i) rec.samples.push_back({g(rng), g(rng)});
    auto X = radix2_fft(rec.samples);
    // bin m corresponds to omega = 2 pi m / (n dt) under the e^{+i w t} sign
    for (std::size_t m : {std::size_t(0), std::size_t(3), std::size_t(100)}) {
        const cplx slow = ringdown_dft(rec, two_pi * double(m) / double(n));
        REQUIRE(std::abs(X[m] - slow) < 1e-9);
    }
    double et = 0.0, ef = 0.0;
    for (auto& z : rec.samples) et += std::norm(z);
    for (auto& z : X) ef += std::norm(z);
    CHECK_THAT(ef, Catch::Matchers::WithinRel(et * double(n), 1e-12));
    CHECK_THROWS_AS(radix2_fft(std::vector<cplx>(100)), config_error);
}

TEST_CASE("single-peak fit round trip without noise") {
    RingdownComponent c{0.8, -1.1, hz_to_rad(5e3), hz_to_rad(8.0)};
    auto rec = synthesize_ringdown({c}, 1.0 / 50e3, 30000);
    auto fit = fit_ringdown_peak(rec, c.omega + hz_to_rad(2.0), hz_to_rad(10.0));
    REQUIRE(fit.converged);
    CHECK_THAT(fit.amplitude, Catch::Matchers::WithinRel(c.amplitude, 1e-6));
    CHECK_THAT(fit.phase, Catch::Matchers::WithinAbs(c.phase, 1e-6));
    CHECK_THAT(fit.omega, Catch::Matchers::WithinRel(c.omega, 1e-9));
    CHECK_THAT(fit.rate, Catch::Matchers::WithinRel(c.rate, 1e-6));
}

TEST_CASE("modeshape round trip at 40 dB SNR") {
    // six tones at device-like spacings; amplitude error budget 1e-3 relative,
    // phase budget 2 mrad
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // keep the record a few decay times long: past that the tones are gone
    // and extra samples only accumulate noise in the transform
    const double dt = 1.0 / 50e3;
    const std::size_t K = 1 << 14;
    const std::array<double, 6> tone_hz = {1.2e3, 2.1e3, 3.3e3, 4.4e3, 5.9e3, 7.5e3};
    int trials_run = 0;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<RingdownComponent> comps;
        std::vector<double> guesses, rates;
        double weakest = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 6; ++i) {
            RingdownComponent c;
            c.amplitude = 0.2 + 0.8 * u(rng);
            c.phase = two_pi * u(rng) - pi;
            c.omega = hz_to_rad(tone_hz[i]);
            c.rate = hz_to_rad(2.0 + 2.0 * u(rng));
            weakest = std::min(weakest, c.amplitude);
            comps.push_back(c);
            guesses.push_back(c.omega * (1.0 + 1e-5 * (u(rng) - 0.5)));
            rates.push_back(c.rate * (1.0 + 0.2 * (u(rng) - 0.5)));
        }
        // 40 dB amplitude SNR for the weakest tone
        const double sigma = weakest / 100.0;
        auto rec = synthesize_ringdown(comps, dt, K, sigma, 1000 + trial);
        auto est = extract_modeshape(rec, guesses, rates);

        Eigen::VectorXcd truth(6);
        double n2 = 0.0;
        for (int i = 0; i < 6; ++i) n2 += comps[i].amplitude * comps[i].amplitude;
        for (int i = 0; i < 6; ++i)
            truth(i) = comps[i].amplitude / std::sqrt(n2) *
                       std::exp(cplx(0.0, comps[i].phase -
                                              comps[est.reference_index].phase));
        for (int i = 0; i < 6; ++i) {
            REQUIRE_THAT(std::abs(est.shape(i)),
                         Catch::Matchers::WithinRel(std::abs(truth(i)), 1e-3));
            const double dphi = std::remainder(
                std::arg(est.shape(i)) - std::arg(truth(i)), two_pi);
            REQUIRE(std::abs(dphi) < 2e-3);
        }
        ++trials_run;
    }
    CHECK(trials_run == 10);
}

TEST_CASE("overlap warning triggers for crowded tones") {
    std::vector<RingdownComponent> comps(2);
    comps[0] = {1.0, 0.0, hz_to_rad(1e3), hz_to_rad(50.0)};
    comps[1] = {1.0, 0.0, hz_to_rad(1.2e3), hz_to_rad(50.0)};
    auto rec = synthesize_ringdown(comps, 1.0 / 50e3, 1 << 14);
    auto est = extract_modeshape(rec, {comps[0].omega, comps[1].omega},
                                 {comps[0].rate, comps[1].rate});
    CHECK(est.overlap_warning);
}

TEST_CASE("excite-and-release protocol recovers the driven collective shape") {
    auto mech = fixture::device_mechanics();
    auto cav = fixture::device_cavity();
    // deep in the collective regime the steady-state drive response is
    // dominated by the bright eigenmode; at lower powers the narrow detuned
    // dark modes contaminate the prepared state
    auto pump_hi = PumpContext::from_photon_number(mech, hz_to_rad(1.991e6), 1e8);
    auto pump_lo = PumpContext::from_photon_number(mech, hz_to_rad(1.991e6), 1e3);

    // drive at the bright collective resonance
    auto modes_hi = collective_eigenmodes(dynamical_matrix(mech, cav, pump_hi));
    const int bright = bright_mode_index(modes_hi, pump_hi);
    REQUIRE(bright >= 0);
    auto res = simulate_modeshape_protocol(mech, cav, pump_hi, pump_lo,
                                           modes_hi.modes[bright].frequency,
                                           1.0 / 50e3, 1 << 15, 0.0, 3);

    // the recorded shape matches the excitation left in the oscillators
    Eigen::VectorXcd truth = res.excitation / res.excitation.norm();
    int ref = res.estimate.reference_index;
    truth *= std::exp(cplx(0.0, -std::arg(truth(ref))));
    for (int i = 0; i < 6; ++i) {
        REQUIRE_THAT(std::abs(res.estimate.shape(i)),
                     Catch::Matchers::WithinRel(std::abs(truth(i)), 1e-2));
        REQUIRE(std::abs(std::remainder(std::arg(res.estimate.shape(i)) -
                                            std::arg(truth(i)), two_pi)) < 2e-2);
    }
    // extraction itself is near lossless
    const double f_round = std::norm((truth.adjoint() * res.estimate.shape)(0));
    CHECK(f_round > 0.999);

    // the prepared state is the bright eigenmode
    const Eigen::VectorXcd psi_b = modes_hi.modes[bright].mech_vector;
    Eigen::VectorXcd exc = res.excitation / res.excitation.norm();
    CHECK(std::norm((psi_b.adjoint() * exc)(0)) > 0.99);
}
