#ifndef HEXAMER_TESTS_DEVICE_FIXTURE_HPP
#define HEXAMER_TESTS_DEVICE_FIXTURE_HPP

// Shared measured-device fixtures used across the test suites.

#include <array>
#include <random>

#include "hexamer/circuit.hpp"
#include "hexamer/dynamics.hpp"

namespace fixture {

using namespace hexamer;

inline CircuitParams device_circuit() {
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

inline MechanicalParams device_mechanics() {
    MechanicalParams m;
    const double base = hz_to_rad(1.991e6);
    const std::array<double, 6> offset_hz = {-5.19e3, -1.30e3, -0.68e3,
                                             1.63e3, 2.18e3, 3.37e3};
    const std::array<double, 6> quality = {16.84e6, 7.84e6, 15.87e6,
                                           11.80e6, 8.26e6, 5.56e6};
    const std::array<double, 6> g0_hz = {1.3, 1.3, 1.4, 1.2, 1.2, 1.2};
    for (int i = 0; i < 6; ++i) {
        const double w = base + hz_to_rad(offset_hz[i]);
        m.omega_m.push_back(w);
        m.gamma_m.push_back(w / quality[i]);
        m.g0.push_back(hz_to_rad(g0_hz[i]));
    }
    return m;
}

// Same spread of frequencies/damping but one common coupling rate; used where
// the ideal collective limit (xi -> N) is the reference.
inline MechanicalParams device_mechanics_equal_g() {
    MechanicalParams m = device_mechanics();
    for (auto& g : m.g0) g = hz_to_rad(1.3);
    return m;
}

inline CavityParams device_cavity() {
    CavityParams c;
    c.kappa_ex = hz_to_rad(25e3);
    c.kappa_0 = hz_to_rad(7e3);
    c.omega_c = hz_to_rad(4.814e9);
    return c;
}

// Random stable N-oscillator system for property tests.
inline void random_system(std::mt19937_64& rng, std::size_t n_osc,
                          MechanicalParams& mech, CavityParams& cav,
                          PumpContext& pump) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    mech = MechanicalParams{};
    const double wm0 = hz_to_rad(0.5e6 + 3e6 * u(rng));
    for (std::size_t i = 0; i < n_osc; ++i) {
        mech.omega_m.push_back(wm0 * (1.0 + 0.02 * (u(rng) - 0.5)));
        mech.gamma_m.push_back(hz_to_rad(0.1 + 100.0 * u(rng)));
        mech.g0.push_back(hz_to_rad(0.5 + 2.0 * u(rng)));
    }
    cav = CavityParams{};
    cav.kappa_ex = hz_to_rad(10e3 + 100e3 * u(rng));
    cav.kappa_0 = hz_to_rad(1e3 + 30e3 * u(rng));
    cav.omega_c = hz_to_rad(4e9 + 2e9 * u(rng));
    pump = PumpContext::from_photon_number(mech, wm0 * (1.0 + 0.01 * (u(rng) - 0.5)),
                                           1e4 + 1e9 * u(rng));
}

}  // namespace fixture

#endif
