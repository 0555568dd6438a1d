#ifndef HEXAMER_CIRCUIT_HPP
#define HEXAMER_CIRCUIT_HPP

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hexamer/common.hpp"

namespace hexamer {

// Lumped-element description of the six-site ring. Sites are numbered 1..6
// around the ring; site 1 is closest to the feedline and site 4 farthest, so
// sites equidistant from the feedline share a decay rate:
// (kappa_1, kappa_2, kappa_3, kappa_4, kappa_3, kappa_2).
struct CircuitParams {
    double drum_capacitance = 0.0;   // F
    double stray_capacitance = 0.0;  // F
    double self_inductance = 0.0;    // H
    double mutual_m1 = 0.0;          // H, nearest neighbor
    double mutual_m2 = 0.0;          // H, second neighbor
    double mutual_m3 = 0.0;          // H, opposite site
    std::array<double, 4> site_feedline_rates{0.0, 0.0, 0.0, 0.0};  // rad/s

    double total_capacitance() const { return drum_capacitance + stray_capacitance; }

    void validate() const {
        if (drum_capacitance <= 0 || stray_capacitance <= 0)
            throw config_error("circuit: capacitances must be positive");
        if (self_inductance <= 0)
            throw config_error("circuit: self inductance must be positive");
        if (mutual_m1 < 0 || mutual_m2 < 0 || mutual_m3 < 0)
            throw config_error("circuit: mutual inductances must be nonnegative");
        if (self_inductance - 2 * mutual_m1 - 2 * mutual_m2 - mutual_m3 <= 0)
            throw config_error("circuit: L - 2M1 - 2M2 - M3 must stay positive");
        for (double k : site_feedline_rates)
            if (k < 0) throw config_error("circuit: feedline rates must be nonnegative");
    }

    // Site decay rates expanded around the ring.
    std::array<double, 6> site_rates() const {
        const auto& k = site_feedline_rates;
        return {k[0], k[1], k[2], k[3], k[2], k[1]};
    }
};

struct MicrowaveModeSet {
    // Fixed symmetry order: index 0 is the symmetric (auxiliary) mode, then
    // the two degenerate pairs, index 5 the anti-symmetric (primary) mode.
    // For a dominant nearest-neighbor mutual inductance (the device regime)
    // this order is also frequency-descending.
    std::array<double, 6> frequencies{};                 // rad/s
    Eigen::Matrix<cplx, 6, 6> modeshapes;                // unit-norm columns
    std::array<double, 6> feedline_rates{};              // rad/s
    double omega0 = 0.0;                                 // single-site frequency
    double j1 = 0.0, j2 = 0.0, j3 = 0.0;                 // first order in M_i/L
    double j1_exact = 0.0, j2_exact = 0.0, j3_exact = 0.0;
    double omega0_exact = 0.0;

    static constexpr int auxiliary_index = 0;
    static constexpr int primary_index = 5;
};

// Rank-one feedline dissipator: H_nH = -(i/2) |k><k| with k_m = sqrt(kappa_m).
// The per-mode rate is the squared overlap with |k>, which conserves the trace
// and reduces to the familiar constructive/destructive interference rates for
// the symmetric and anti-symmetric modes.
inline std::array<double, 6> nonhermitian_dressing(const CircuitParams& params,
                                                   const Eigen::Matrix<cplx, 6, 6>& modeshapes) {
    params.validate();
    const auto kappas = params.site_rates();
    Eigen::Matrix<cplx, 6, 1> k;
    for (int m = 0; m < 6; ++m) k(m) = std::sqrt(kappas[m]);
    std::array<double, 6> rates{};
    for (int n = 0; n < 6; ++n) {
        const cplx overlap = k.adjoint() * modeshapes.col(n);
        rates[n] = std::norm(overlap);
    }
    return rates;
}

inline MicrowaveModeSet circuit_eigenmodes(const CircuitParams& params) {
    params.validate();
    const double L = params.self_inductance;
    const double M1 = params.mutual_m1, M2 = params.mutual_m2, M3 = params.mutual_m3;
    const double Ct = params.total_capacitance();

    // Closed-form effective inductances per mode, in frequency-descending
    // order: symmetric, the two degenerate pairs, anti-symmetric.
    const double l_sym = L - 2 * M1 - 2 * M2 - M3;
    const double l_p1 = L - M1 + M2 + M3;
    const double l_p2 = L + M1 + M2 - M3;
    const double l_asym = L + 2 * M1 - 2 * M2 + M3;
    for (double l : {l_sym, l_p1, l_p2, l_asym})
        if (l <= 0) throw numerical_error("circuit: imaginary mode frequency (inductance combination <= 0)");

    auto freq = [&](double l) { return 1.0 / std::sqrt(Ct * l); };

    MicrowaveModeSet out;
    out.frequencies = {freq(l_sym), freq(l_p1), freq(l_p1),
                       freq(l_p2), freq(l_p2), freq(l_asym)};

    // DFT modeshapes U_nm = e^{i n 2pi m / 6}/sqrt(6); columns ordered to match
    // the frequency list: n = 0, +1, -1, +2, -2, 3. Global phase per column is
    // fixed by making the site-1 amplitude real nonnegative.
    const std::array<int, 6> mode_n = {0, 1, -1, 2, -2, 3};
    for (int c = 0; c < 6; ++c) {
        Eigen::Matrix<cplx, 6, 1> col;
        for (int m = 1; m <= 6; ++m)
            col(m - 1) = std::polar(1.0 / std::sqrt(6.0),
                                    double(mode_n[c]) * two_pi * double(m) / 6.0);
        const cplx first = col(0);
        if (std::abs(first) > 0) col *= std::conj(first) / std::abs(first);
        out.modeshapes.col(c) = col;
    }

    // Hopping couplings. First order in M_i/L (with the quoted higher-order
    // corrections), and the exact values solved from the four distinct
    // closed-form frequencies:
    //   w_sym  = w0 + 2J1 + 2J2 + J3
    //   w_p1   = w0 +  J1 -  J2 - J3
    //   w_p2   = w0 -  J1 -  J2 + J3
    //   w_asym = w0 - 2J1 + 2J2 - J3
    const double x1 = M1 / (2 * L), x2 = M2 / (2 * L), x3 = M3 / (2 * L);
    const double w_lc = 1.0 / std::sqrt(L * Ct);
    out.omega0 = w_lc * (1.0 + 30.0 * x1 * x2 * x3);
    out.j1 = out.omega0 * (x1 + 3 * x1 * x2 + 3 * x2 * x3);
    out.j2 = out.omega0 * (x2 + 3 * x1 * x3 + 15 * x1 * x2 * x3);
    out.j3 = out.omega0 * (x3 + 6 * x1 * x2);

    Eigen::Matrix4d A;
    A << 1, 2, 2, 1,
         1, 1, -1, -1,
         1, -1, -1, 1,
         1, -2, 2, -1;
    Eigen::Vector4d w(out.frequencies[0], out.frequencies[1],
                      out.frequencies[3], out.frequencies[5]);
    const Eigen::Vector4d sol = A.colPivHouseholderQr().solve(w);
    out.omega0_exact = sol(0);
    out.j1_exact = sol(1);
    out.j2_exact = sol(2);
    out.j3_exact = sol(3);

    out.feedline_rates = nonhermitian_dressing(params, out.modeshapes);
    return out;
}

// ---------------------------------------------------------------------------
// Reconstruction of the split degenerate pairs from measured mode rates.

struct SplitModeCandidate {
    double phi = 0.0;        // pair +-1 mixing phase
    double phi_prime = 0.0;  // pair +-2 mixing phase
    std::array<double, 4> site_rates{};  // kappa_1..kappa_4, rad/s
    double cost = 0.0;
    Eigen::Matrix<cplx, 6, 6> modeshapes;  // recombined non-degenerate shapes
};

struct SplitModeReconstruction {
    std::vector<SplitModeCandidate> candidates;  // best first
    bool phi_unidentifiable = false;
    bool converged = false;
    double splitting_r = 0.0;       // r  = splitting/2 of pair +-1
    double splitting_r_prime = 0.0; // r' = splitting/2 of pair +-2
};

namespace detail {

// Overlaps of sqrt-rate vector with the ideal DFT modes (phase-fixed columns).
struct PairOverlaps {
    cplx z0, z1, z2, z3;  // symmetric, pair-1, pair-2, anti-symmetric
};

inline PairOverlaps rate_overlaps(const std::array<double, 4>& kap) {
    const std::array<double, 6> site = {kap[0], kap[1], kap[2], kap[3], kap[2], kap[1]};
    PairOverlaps z{0, 0, 0, 0};
    for (int m = 1; m <= 6; ++m) {
        const double s = std::sqrt(site[m - 1]);
        z.z0 += s * std::polar(1.0 / std::sqrt(6.0), 0.0);
        z.z1 += s * std::polar(1.0 / std::sqrt(6.0), two_pi * m / 6.0);
        z.z2 += s * std::polar(1.0 / std::sqrt(6.0), 2.0 * two_pi * m / 6.0);
        z.z3 += s * std::polar(1.0 / std::sqrt(6.0), 3.0 * two_pi * m / 6.0);
    }
    return z;
}

// Model rates in modeset order (aux, pair1+, pair1-, pair2+, pair2-, primary)
// for mixing phases phi, phi'. The +- recombinations
// (|u_k> ± e^{-i phi}|u_-k>)/sqrt(2) give |z_k|^2 (1 ± cos(phi + 2 arg z_k)).
inline std::array<double, 6> model_rates(const std::array<double, 4>& kap,
                                         double phi, double phip) {
    const PairOverlaps z = rate_overlaps(kap);
    const double a1 = std::norm(z.z1), a2 = std::norm(z.z2);
    const double c1 = std::cos(phi + 2.0 * std::arg(z.z1));
    const double c2 = std::cos(phip + 2.0 * std::arg(z.z2));
    return {std::norm(z.z0),
            a1 * (1.0 + c1), a1 * (1.0 - c1),
            a2 * (1.0 + c2), a2 * (1.0 - c2),
            std::norm(z.z3)};
}

}  // namespace detail

// Recover {phi, phi', kappa_1..4} from the six measured mode rates, plus the
// recombined split-pair modeshapes. The inverse problem is solved in closed
// form. With k_m = sqrt(kappa_m) arranged around the ring, the overlaps with
// the ideal traveling-wave shapes collapse to four signed linear combinations
//   A0 =  s1 + 2 s2 + 2 s3 + s4          (symmetric mode)
//   C1 =  s1 +   s2 -   s3 - s4          (pair +-1, with fixed phase pi/3)
//   C2 =  s1 -   s2 -   s3 + s4          (pair +-2, with fixed phase 2 pi/3)
//   A3 = -s1 + 2 s2 - 2 s3 + s4          (anti-symmetric mode)
// whose magnitudes are fixed by the measured rates but whose signs are not:
// every sign pattern that yields nonnegative s_i reproduces the data exactly,
// and within each pair the mixing phase enters only through
// cos(phi + 2 psi_k), so phi is identified up to phi -> -phi - 2 psi_k.
// All exact preimages are returned as candidates; ties are broken by the
// smallest phi. If a pair couples to the feedline with vanishing strength
// (|C_k| ~ 0, e.g. all site rates equal) its phase drops out of the data
// entirely and the reconstruction is flagged unidentifiable.
inline SplitModeReconstruction reconstruct_split_modes(
    double splitting_pair1, double splitting_pair2,
    const std::array<double, 6>& measured_rates,
    double residual_threshold = 1e-6) {
    if (splitting_pair1 < 0 || splitting_pair2 < 0)
        throw config_error("reconstruct_split_modes: splittings must be nonnegative");
    double trace = 0.0, scale2 = 0.0;
    for (double r : measured_rates) {
        if (r < 0) throw config_error("reconstruct_split_modes: measured rates must be nonnegative");
        trace += r;
        scale2 += r * r;
    }
    if (trace <= 0) throw config_error("reconstruct_split_modes: all rates are zero");

    SplitModeReconstruction out;
    out.splitting_r = splitting_pair1 / 2.0;
    out.splitting_r_prime = splitting_pair2 / 2.0;

    const double pair1_sum = measured_rates[1] + measured_rates[2];
    const double pair2_sum = measured_rates[3] + measured_rates[4];
    const double a0 = std::sqrt(6.0 * measured_rates[0]);
    const double a3 = std::sqrt(6.0 * measured_rates[5]);
    const double c1 = std::sqrt(3.0 * pair1_sum);  // sqrt(6) * |z_1|
    const double c2 = std::sqrt(3.0 * pair2_sum);

    // fixed doubled phases of the pair overlaps (sign flips shift them by 2 pi)
    const double psi2_1 = 2.0 * pi / 3.0;
    const double psi2_2 = 4.0 * pi / 3.0;

    auto wrap = [](double x) {
        double y = std::fmod(x, two_pi);
        if (y < 0) y += two_pi;
        return y;
    };

    // mixing phases from the within-pair rate asymmetry
    std::vector<double> phis1, phis2;
    out.phi_unidentifiable = false;
    if (pair1_sum <= 1e-12 * trace) {
        out.phi_unidentifiable = true;
        phis1 = {0.0};
    } else {
        const double cosv = std::clamp(
            (measured_rates[1] - measured_rates[2]) / pair1_sum, -1.0, 1.0);
        const double ac = std::acos(cosv);
        phis1 = {wrap(ac - psi2_1), wrap(-ac - psi2_1)};
    }
    if (pair2_sum <= 1e-12 * trace) {
        out.phi_unidentifiable = true;
        phis2 = {0.0};
    } else {
        const double cosv = std::clamp(
            (measured_rates[3] - measured_rates[4]) / pair2_sum, -1.0, 1.0);
        const double ac = std::acos(cosv);
        phis2 = {wrap(ac - psi2_2), wrap(-ac - psi2_2)};
    }

    // enumerate the sign patterns of the four linear combinations
    Eigen::Matrix4d Amat;
    Amat << 1, 2, 2, 1,
            1, 1, -1, -1,
            1, -1, -1, 1,
            -1, 2, -2, 1;
    const Eigen::Matrix4d Ainv = Amat.inverse();
    std::vector<std::array<double, 4>> kappa_solutions;
    for (int mask = 0; mask < 16; ++mask) {
        Eigen::Vector4d rhs((mask & 1) ? -a0 : a0, (mask & 2) ? -c1 : c1,
                            (mask & 4) ? -c2 : c2, (mask & 8) ? -a3 : a3);
        Eigen::Vector4d s = Ainv * rhs;
        const double floor = -1e-12 * std::sqrt(trace);
        if (s.minCoeff() < floor) continue;
        std::array<double, 4> kap{};
        for (int i = 0; i < 4; ++i) {
            const double si = std::max(0.0, s(i));
            kap[i] = si * si;
        }
        bool dup = false;
        for (const auto& k : kappa_solutions) {
            double d = 0;
            for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(k[i] - kap[i]));
            if (d <= 1e-9 * trace) dup = true;
        }
        if (!dup) kappa_solutions.push_back(kap);
    }
    if (kappa_solutions.empty())
        throw numerical_error("reconstruct_split_modes: no nonnegative rate pattern matches");

    // ideal DFT columns with the same phase convention as circuit_eigenmodes
    Eigen::Matrix<cplx, 6, 6> U;
    const std::array<int, 6> mode_n = {0, 1, -1, 2, -2, 3};
    for (int col = 0; col < 6; ++col)
        for (int m = 1; m <= 6; ++m)
            U(m - 1, col) = std::polar(1.0 / std::sqrt(6.0),
                                       double(mode_n[col]) * two_pi * double(m) / 6.0);

    auto cost_of = [&](const std::array<double, 4>& kap, double phi, double phip) {
        const auto model = detail::model_rates(kap, phi, phip);
        double c = 0.0;
        for (int n = 0; n < 6; ++n) {
            const double d = model[n] - measured_rates[n];
            c += d * d;
        }
        return c;
    };

    for (const auto& kap : kappa_solutions)
        for (double pa : phis1)
            for (double pb : phis2) {
                SplitModeCandidate cand;
                cand.phi = pa;
                cand.phi_prime = pb;
                cand.site_rates = kap;
                cand.cost = cost_of(kap, pa, pb);
                Eigen::Matrix<cplx, 6, 6> shapes = U;
                const cplx ea = std::exp(cplx(0, -pa)), eb = std::exp(cplx(0, -pb));
                shapes.col(1) = (U.col(1) + ea * U.col(2)) / std::sqrt(2.0);
                shapes.col(2) = (U.col(1) - ea * U.col(2)) / std::sqrt(2.0);
                shapes.col(3) = (U.col(3) + eb * U.col(4)) / std::sqrt(2.0);
                shapes.col(4) = (U.col(3) - eb * U.col(4)) / std::sqrt(2.0);
                cand.modeshapes = shapes;
                out.candidates.push_back(std::move(cand));
            }

    std::sort(out.candidates.begin(), out.candidates.end(),
              [&](const SplitModeCandidate& x, const SplitModeCandidate& y) {
                  if (std::abs(x.cost - y.cost) > 1e-10 * (scale2 + x.cost))
                      return x.cost < y.cost;
                  if (std::abs(x.phi - y.phi) > 1e-12) return x.phi < y.phi;
                  return x.phi_prime < y.phi_prime;
              });
    out.converged = out.candidates.front().cost <= residual_threshold * scale2;
    return out;
}

// Forward model used by callers/tests: measured rates for a known disorder
// realization of the pair-mixing phases and site rates.
inline std::array<double, 6> split_mode_forward_rates(const std::array<double, 4>& site_rates,
                                                      double phi, double phi_prime) {
    return detail::model_rates(site_rates, phi, phi_prime);
}

// ---------------------------------------------------------------------------
// Cascaded directional couplers on the drive line.

struct CouplerCascade {
    std::vector<double> coupler_db;  // coupling value per directional coupler
    double branch_phase = 0.0;       // per-branch phase delay (radians)
    double branch_loss_db = 0.0;     // per-branch attenuation
};

inline Eigen::Matrix4cd coupler_transfer(double coupling_db) {
    if (coupling_db < 0) throw config_error("coupler: coupling dB must be >= 0");
    const double c = std::pow(10.0, -coupling_db / 20.0);
    const double t = std::sqrt(std::max(0.0, 1.0 - c * c));
    Eigen::Matrix4cd T = Eigen::Matrix4cd::Zero();
    T(0, 0) = 1.0 / c;
    T(0, 3) = t / c;
    T(1, 1) = 1.0 / c;
    T(1, 2) = t / c;
    T(2, 1) = t / c;
    T(2, 2) = 1.0 / c;
    T(3, 0) = t / c;
    T(3, 3) = 1.0 / c;
    return T;
}

inline Eigen::Matrix4cd line_transfer(double phase, double loss_db) {
    if (loss_db < 0) throw config_error("coupler: branch loss dB must be >= 0");
    const double eta = std::pow(10.0, -loss_db / 20.0);
    Eigen::Matrix4cd T = Eigen::Matrix4cd::Zero();
    const cplx fwd = std::exp(cplx(0, -phase)) / eta;
    const cplx bwd = eta * std::exp(cplx(0, phase));
    T(0, 0) = fwd;
    T(1, 1) = fwd;
    T(2, 2) = bwd;
    T(3, 3) = bwd;
    return T;
}

inline cplx coupler_cascade_s21(const CouplerCascade& cascade) {
    if (cascade.coupler_db.size() < 2)
        throw config_error("coupler cascade needs at least two couplers");
    Eigen::Matrix4cd T = coupler_transfer(cascade.coupler_db.front());
    for (std::size_t i = 1; i < cascade.coupler_db.size(); ++i) {
        T = T * line_transfer(cascade.branch_phase, cascade.branch_loss_db);
        T = T * coupler_transfer(cascade.coupler_db[i]);
    }
    const cplx den = T(1, 0) * T(0, 1) - T(1, 1) * T(0, 0);
    if (std::abs(den) < 1e-300)
        throw numerical_error("coupler cascade: singular transfer matrix");
    return -T(1, 1) / den;
}

}  // namespace hexamer

#endif
