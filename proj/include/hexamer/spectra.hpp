#ifndef HEXAMER_SPECTRA_HPP
#define HEXAMER_SPECTRA_HPP

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hexamer/common.hpp"
#include "hexamer/dynamics.hpp"
#include "hexamer/quadrature.hpp"

namespace hexamer {

// Thermal occupations of the baths the linearized system couples to.
struct BathOccupations {
    double n_cavity = 0.0;        // intrinsic-loss bath of the cavity
    std::vector<double> n_mech;   // one per oscillator

    void validate(std::size_t n_osc) const {
        if (n_cavity < 0) throw config_error("baths: cavity occupation must be nonnegative");
        if (n_mech.size() != n_osc)
            throw config_error("baths: need one mechanical occupation per oscillator");
        for (double n : n_mech)
            if (n < 0) throw config_error("baths: occupations must be nonnegative");
    }
};

// Bose-Einstein occupation of a mode at angular frequency omega.
inline double thermal_occupation(double omega, double temperature) {
    if (omega <= 0 || temperature <= 0)
        throw config_error("thermal_occupation: omega and T must be positive");
    const double x = hbar * omega / (k_boltzmann * temperature);
    return std::exp(-x) / (1.0 - std::exp(-x));
}

// Scattering coefficients from the noise inputs (index 0: cavity intrinsic
// bath, 1..N: mechanical baths) to the intracavity/mechanical fields:
//   B_{k,0} = -i g_k chi_k / D                     (k >= 1)
//   B_{k,k} = chi_k - g_k^2 chi_k^2 / D
//   B_{k,p} = -g_k g_p chi_k chi_p / D             (k != p, both >= 1)
//   B_{0,p} = [-i g_p chi_p + (1 + i g_p chi_p) delta_{p,0}] / D
// with chi_0 the cavity susceptibility and D the collective denominator.
inline Eigen::MatrixXcd scattering_matrix(double omega, const MechanicalParams& mech,
                                          const CavityParams& cav,
                                          const PumpContext& pump) {
    const std::size_t n = mech.size();
    const cplx D = collective_denominator(omega, mech, cav, pump);
    std::vector<cplx> chi(n + 1);
    std::vector<double> g(n + 1, 0.0);
    chi[0] = chi_cavity(omega, cav, pump.detuning);
    for (std::size_t i = 0; i < n; ++i) {
        chi[i + 1] = chi_mech(omega, mech.omega_m[i], mech.gamma_m[i]);
        g[i + 1] = pump.g[i];
    }
    Eigen::MatrixXcd B(n + 1, n + 1);
    B(0, 0) = 1.0 / D;  // cavity row
    for (std::size_t p = 1; p <= n; ++p)
        B(0, p) = cplx(0, -1) * g[p] * chi[p] / D;
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t p = 0; p <= n; ++p) {
            if (p == 0)
                B(k, p) = cplx(0, -1) * g[k] * chi[k] / D;
            else if (p == k)
                B(k, p) = chi[k] - g[k] * g[k] * chi[k] * chi[k] / D;
            else
                B(k, p) = -g[k] * g[p] * chi[k] * chi[p] / D;
        }
    }
    return B;
}

// Symmetrized output spectrum of the feedline, in photon units:
//   Sbar(w) = 1/2 + kappa_ex kappa_0 n_c / |D|^2
//                 + sum_i kappa_ex Gamma_i g_i^2 |chi_i|^2 n_i / |D|^2.
// The 1/2 is the exact vacuum floor.
inline double output_psd(double omega, const MechanicalParams& mech,
                         const CavityParams& cav, const PumpContext& pump,
                         const BathOccupations& baths) {
    const cplx D = collective_denominator(omega, mech, cav, pump);
    const double d2 = std::norm(D);
    double s = 0.5 + cav.kappa_ex * cav.kappa_0 * baths.n_cavity / d2;
    for (std::size_t i = 0; i < mech.size(); ++i) {
        const cplx chi = chi_mech(omega, mech.omega_m[i], mech.gamma_m[i]);
        s += cav.kappa_ex * mech.gamma_m[i] * pump.g[i] * pump.g[i] *
             std::norm(chi) * baths.n_mech[i] / d2;
    }
    return s;
}

inline RealSpectrum output_psd(const std::vector<double>& omega,
                               const MechanicalParams& mech, const CavityParams& cav,
                               const PumpContext& pump, const BathOccupations& baths) {
    mech.validate();
    cav.validate();
    baths.validate(mech.size());
    require_increasing(omega, "output_psd");
    RealSpectrum s;
    s.freq = omega;
    s.value.reserve(omega.size());
    for (double w : omega) s.value.push_back(output_psd(w, mech, cav, pump, baths));
    return s;
}

// Mechanical cross-spectra S_{b_i^dag b_j}(w), assembled from the scattering
// coefficients: S_ij = kappa_0 n_c B*_{i,0} B_{j,0} + sum_k Gamma_k n_k
// B*_{i,k} B_{j,k} (indices i,j are 1-based oscillator labels internally).
inline Eigen::MatrixXcd mechanical_cross_spectra(double omega,
                                                 const MechanicalParams& mech,
                                                 const CavityParams& cav,
                                                 const PumpContext& pump,
                                                 const BathOccupations& baths) {
    const std::size_t n = mech.size();
    const Eigen::MatrixXcd B = scattering_matrix(omega, mech, cav, pump);
    Eigen::MatrixXcd S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx v = cav.kappa_0 * baths.n_cavity *
                     std::conj(B(i + 1, 0)) * B(j + 1, 0);
            for (std::size_t k = 0; k < n; ++k)
                v += mech.gamma_m[k] * baths.n_mech[k] *
                     std::conj(B(i + 1, k + 1)) * B(j + 1, k + 1);
            S(i, j) = v;
        }
    return S;
}

// Anti-normally ordered counterpart S_{b_i b_j^dag}(w): the same scattering
// structure with every bath weight n -> n + 1 and the conjugation swapped.
// Unlike the normal-ordered case, the cold feedline port contributes its
// vacuum here (rate kappa_ex, weight 1), so the diagonal integrates to
// <b_i b_i^dag> = <b_i^dag b_i> + 1.
inline Eigen::MatrixXcd mechanical_cross_spectra_antinormal(double omega,
                                                            const MechanicalParams& mech,
                                                            const CavityParams& cav,
                                                            const PumpContext& pump,
                                                            const BathOccupations& baths) {
    const std::size_t n = mech.size();
    const Eigen::MatrixXcd B = scattering_matrix(omega, mech, cav, pump);
    Eigen::MatrixXcd S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx v = (cav.kappa_0 * (baths.n_cavity + 1.0) + cav.kappa_ex) *
                     B(i + 1, 0) * std::conj(B(j + 1, 0));
            for (std::size_t k = 0; k < n; ++k)
                v += mech.gamma_m[k] * (baths.n_mech[k] + 1.0) *
                     B(i + 1, k + 1) * std::conj(B(j + 1, k + 1));
            S(i, j) = v;
        }
    return S;
}

struct CovarianceOptions {
    double rel_tol = 1e-6;            // relative accuracy of the integrals
    double window_linewidths = 2000;  // integration half-window per resonance
    double min_window_linewidths = 40;  // validity floor for the window
};

struct CovarianceResult {
    Eigen::MatrixXcd matrix;          // <b_i^dag b_j>, Hermitian
    double hermiticity_error = 0.0;   // max asymmetry before Hermitization
    double omega_lo = 0.0, omega_hi = 0.0;  // integration window used
};

// Steady-state mechanical covariance <b_i^dag b_j> = int S_ij(w) dw / 2pi.
// The integration window covers every mechanics-dominated eigenmode of the
// dynamical matrix out to `window_linewidths` dressed linewidths, with
// breakpoints seeded at each resonance.
inline CovarianceResult covariance_matrix(const MechanicalParams& mech,
                                          const CavityParams& cav,
                                          const PumpContext& pump,
                                          const BathOccupations& baths,
                                          const CovarianceOptions& opt = {}) {
    mech.validate();
    cav.validate();
    baths.validate(mech.size());
    if (opt.window_linewidths < opt.min_window_linewidths)
        throw config_error("covariance_matrix: integration window below the "
                           "minimum linewidth coverage");

    const auto modes = collective_eigenmodes(dynamical_matrix(mech, cav, pump));
    // drop the cavity-dominated eigenmode from the window bookkeeping
    int cavity_like = 0;
    for (std::size_t j = 1; j < modes.modes.size(); ++j)
        if (modes.modes[j].cavity_weight > modes.modes[cavity_like].cavity_weight)
            cavity_like = int(j);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<double> breaks;
    for (std::size_t j = 0; j < modes.modes.size(); ++j) {
        if (int(j) == cavity_like) continue;
        const double w = modes.modes[j].frequency;
        const double gam = std::max(modes.modes[j].linewidth, 1e-6 * mech.gamma_m[0]);
        lo = std::min(lo, w - opt.window_linewidths * gam);
        hi = std::max(hi, w + opt.window_linewidths * gam);
        breaks.push_back(w);
    }

    double n_scale = baths.n_cavity;
    for (double n : baths.n_mech) n_scale = std::max(n_scale, n);
    const double abs_tol = opt.rel_tol * std::max(1.0, n_scale) * two_pi;

    auto f = [&](double w) {
        return mechanical_cross_spectra(w, mech, cav, pump, baths);
    };
    Eigen::MatrixXcd raw =
        integrate_matrix_with_breakpoints(f, lo, hi, breaks, abs_tol) / two_pi;

    CovarianceResult out;
    out.omega_lo = lo;
    out.omega_hi = hi;
    out.hermiticity_error = (raw - raw.adjoint()).cwiseAbs().maxCoeff();
    out.matrix = 0.5 * (raw + Eigen::MatrixXcd(raw.adjoint()));
    return out;
}

struct CollectiveOccupations {
    std::vector<double> occupations;   // ascending; eigenvalues of the covariance
    Eigen::MatrixXcd vectors;          // matching eigenvectors as columns
    double bright_occupation = 0.0;    // smallest eigenvalue (the cooled mode)
    double bright_fidelity = 0.0;      // |<psi_ideal|psi_bright>|^2 vs uniform
    bool clamped_negative = false;     // true if tiny negative eigenvalues were clipped
};

inline CollectiveOccupations collective_occupations(const Eigen::MatrixXcd& covariance) {
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0)
        throw config_error("collective_occupations: covariance must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(covariance);
    if (es.info() != Eigen::Success)
        throw numerical_error("collective_occupations: eigensolver failed");
    CollectiveOccupations out;
    const int n = int(covariance.rows());
    out.vectors = es.eigenvectors();
    for (int i = 0; i < n; ++i) {
        double v = es.eigenvalues()(i);
        if (v < 0) {
            if (v < -1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
                throw numerical_error("collective_occupations: covariance is not "
                                      "positive semidefinite");
            v = 0.0;
            out.clamped_negative = true;
        }
        out.occupations.push_back(v);
    }
    out.bright_occupation = out.occupations.front();
    Eigen::VectorXcd ideal = Eigen::VectorXcd::Constant(n, 1.0 / std::sqrt(double(n)));
    out.bright_fidelity = std::norm((ideal.adjoint() * out.vectors.col(0))(0));
    return out;
}

// ---------------------------------------------------------------------------
// Detection chain.

// Amplification chain referred to the device output. The added noise referred
// to the device obeys (1 + n_add) = (1 + n_add_amp) / eta, with eta the power
// transmission between device and amplifier.
struct MeasurementChain {
    double gain = 1.0;        // power gain G
    double n_added = 0.0;     // input-referred added photons, device reference
    double eta = 1.0;         // device-to-amplifier power transmission, (0, 1]

    void validate() const {
        if (gain <= 0) throw config_error("chain: gain must be positive");
        if (n_added < 0) throw config_error("chain: added noise must be nonnegative");
        if (eta <= 0 || eta > 1) throw config_error("chain: eta must be in (0, 1]");
    }

    // added noise referred to the amplifier input
    double n_added_amp() const { return eta * (1.0 + n_added) - 1.0; }

    static MeasurementChain from_amplifier(double gain, double n_added_amp, double eta) {
        MeasurementChain c;
        c.gain = gain;
        c.eta = eta;
        c.n_added = (1.0 + n_added_amp) / eta - 1.0;
        c.validate();
        return c;
    }
};

// Detected spectrum: S'(w) = G (Sbar(w) + 1/2 + n_add); far from any
// resonance Sbar -> 1/2 and the floor is G (1 + n_add).
inline RealSpectrum detected_psd(const RealSpectrum& device, const MeasurementChain& chain) {
    chain.validate();
    RealSpectrum out;
    out.freq = device.freq;
    out.value.reserve(device.value.size());
    for (double s : device.value)
        out.value.push_back(chain.gain * (s + 0.5 + chain.n_added));
    return out;
}

// Amplifier-calibration line: detected power density G (n_th + n_amp + 1)
// for a matched thermal load of occupation n_th.
inline double amplifier_noise_power(double n_th, double gain, double n_added_amp) {
    if (gain <= 0) throw config_error("amplifier_noise_power: gain must be positive");
    return gain * (n_th + n_added_amp + 1.0);
}

// Residual occupation of a cavity inferred from its emitted spectrum:
// n = int (Sbar_c - 1/2) dw / (2 pi kappa_ex). Trapezoidal integration over
// the provided grid; the vacuum floor is subtracted.
inline double cavity_heating_from_psd(const RealSpectrum& s, double kappa_ex) {
    if (kappa_ex <= 0) throw config_error("cavity_heating: kappa_ex must be positive");
    if (s.freq.size() != s.value.size() || s.freq.size() < 2)
        throw config_error("cavity_heating: need at least two samples");
    require_increasing(s.freq, "cavity_heating");
    double area = 0.0;
    for (std::size_t i = 1; i < s.freq.size(); ++i)
        area += 0.5 * (s.value[i] - 0.5 + s.value[i - 1] - 0.5) *
                (s.freq[i] - s.freq[i - 1]);
    return area / (two_pi * kappa_ex);
}

}  // namespace hexamer

#endif
