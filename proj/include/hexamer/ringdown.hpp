#ifndef HEXAMER_RINGDOWN_HPP
#define HEXAMER_RINGDOWN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hexamer/common.hpp"
#include "hexamer/dynamics.hpp"
#include "hexamer/optim.hpp"

namespace hexamer {

// One decaying tone of a ringdown trace. `rate` is the full (energy)
// linewidth; the field amplitude decays at rate/2.
struct RingdownComponent {
    double amplitude = 0.0;  // >= 0
    double phase = 0.0;      // radians
    double omega = 0.0;      // rad/s, in the demodulated rotating frame
    double rate = 0.0;       // rad/s
};

// Complex demodulated time record, uniformly sampled from t = 0.
struct RingdownRecord {
    double dt = 0.0;
    std::vector<cplx> samples;

    void validate() const {
        if (dt <= 0) throw config_error("ringdown: dt must be positive");
        if (samples.size() < 4) throw config_error("ringdown: record too short");
    }
};

// z(t_k) = sum_j A_j e^{i phi_j} e^{(-i w_j - rate_j/2) t_k} + noise, with
// independent Gaussian noise of std `noise_sigma` on both quadratures.
inline RingdownRecord synthesize_ringdown(const std::vector<RingdownComponent>& comps,
                                          double dt, std::size_t n_samples,
                                          double noise_sigma = 0.0,
                                          std::uint64_t seed = 0) {
    if (dt <= 0) throw config_error("synthesize_ringdown: dt must be positive");
    if (n_samples < 4) throw config_error("synthesize_ringdown: record too short");
    for (const auto& c : comps) {
        if (c.amplitude < 0) throw config_error("synthesize_ringdown: negative amplitude");
        if (c.rate <= 0) throw config_error("synthesize_ringdown: rate must be positive");
        if (std::abs(c.omega) >= pi / dt)
            throw config_error("synthesize_ringdown: tone beyond Nyquist");
    }
    RingdownRecord rec;
    rec.dt = dt;
    rec.samples.resize(n_samples);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = double(k) * dt;
        cplx z = 0.0;
        for (const auto& c : comps)
            z += c.amplitude *
                 std::exp(cplx(-c.rate / 2.0 * t, c.phase - c.omega * t));
        if (noise_sigma > 0) z += cplx(gauss(rng), gauss(rng));
        rec.samples[k] = z;
    }
    return rec;
}

// Finite-record transform dft(w) = dt sum_k z_k e^{+i w t_k}. For a single
// sampled exponential this is the geometric sum
//   A e^{i phi} dt (1 - q^K) / (1 - q),  q = e^{(i (w - W) - rate/2) dt},
// which the peak fit uses as its exact model.
inline cplx ringdown_dft(const RingdownRecord& rec, double omega) {
    cplx acc = 0.0;
    const std::size_t n = rec.samples.size();
    for (std::size_t k = n; k-- > 0;) {
        const double t = double(k) * rec.dt;
        acc += rec.samples[k] * std::exp(cplx(0.0, omega * t));
    }
    return acc * rec.dt;
}

// Radix-2 FFT with the same e^{+i w t} sign convention, for quick spectrum
// displays; length must be a power of two.
inline std::vector<cplx> radix2_fft(std::vector<cplx> x) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw config_error("radix2_fft: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {  // bit reversal
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = two_pi / double(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w = 1.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = x[i + k], v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    return x;
}

struct PeakFit {
    double amplitude = 0.0;
    double phase = 0.0;   // wrapped to (-pi, pi]
    double omega = 0.0;
    double rate = 0.0;
    cplx background{};    // constant complex offset over the fit window
    bool converged = false;
    double residual_norm2 = 0.0;
};

// Fit one decaying tone near omega_guess on a window of +-window_linewidths
// nominal linewidths. The model is the exact transform of the sampled,
// truncated exponential plus a constant complex background absorbing the
// tails of distant peaks.
inline PeakFit fit_ringdown_peak(const RingdownRecord& rec, double omega_guess,
                                 double rate_guess, double window_linewidths = 10.0,
                                 int n_window_points = 101) {
    rec.validate();
    if (rate_guess <= 0) throw config_error("fit_ringdown_peak: rate guess must be positive");
    const std::size_t K = rec.samples.size();
    const double dt = rec.dt;

    const double half = window_linewidths * rate_guess;
    std::vector<double> grid = linspace(omega_guess - half, omega_guess + half,
                                        std::size_t(n_window_points));
    std::vector<cplx> data(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) data[i] = ringdown_dft(rec, grid[i]);

    // refine the center guess from the window maximum
    std::size_t imax = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(data[i]) > std::abs(data[imax])) imax = i;

    // background is complex and linear in frequency: a constant alone cannot
    // absorb the sloping tails of the other peaks at the 1e-3 level
    auto model = [&](double A, double phi, double w0, double rate, cplx bg0,
                     cplx bg1, double w) {
        const cplx q = std::exp(cplx(-rate / 2.0, w - w0) * dt);
        const cplx geo = (std::abs(1.0 - q) < 1e-14)
                             ? cplx(double(K), 0.0)
                             : (1.0 - std::pow(q, double(K))) / (1.0 - q);
        return A * std::exp(cplx(0.0, phi)) * dt * geo + bg0 +
               bg1 * ((w - omega_guess) / half);
    };

    // parameters: A, phi, delta = w0 - omega_guess, rate, bg0, bg1 (re/im)
    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(2 * grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const cplx m = model(p[0], p[1], omega_guess + p[2], std::abs(p[3]),
                                 cplx(p[4], p[5]), cplx(p[6], p[7]), grid[i]);
            r[2 * i] = m.real() - data[i].real();
            r[2 * i + 1] = m.imag() - data[i].imag();
        }
        return r;
    };

    // peak height of a long record is ~ 2A/rate
    const double a0 = std::abs(data[imax]) * rate_guess / 2.0;
    Eigen::VectorXd p0(8);
    p0 << std::max(a0, 1e-30), std::arg(data[imax]), grid[imax] - omega_guess,
        rate_guess, 0.0, 0.0, 0.0, 0.0;
    LeastSquaresOptions opt;
    opt.max_iterations = 600;
    auto res = levenberg_marquardt(residual, p0, opt);

    PeakFit out;
    out.amplitude = std::abs(res.params[0]);
    out.phase = res.params[1] + (res.params[0] < 0 ? pi : 0.0);
    out.phase = std::remainder(out.phase, two_pi);
    out.omega = omega_guess + res.params[2];
    out.rate = std::abs(res.params[3]);
    out.background = cplx(res.params[4], res.params[5]);
    out.converged = res.converged;
    out.residual_norm2 = res.residual_norm2;
    if (!res.converged)
        throw fit_error("fit_ringdown_peak: no convergence");
    return out;
}

struct ModeshapeEstimate {
    Eigen::VectorXcd shape;        // unit norm, reference oscillator at phase 0
    std::vector<PeakFit> peaks;    // per oscillator, input order
    int reference_index = -1;      // largest-amplitude oscillator
    bool overlap_warning = false;  // fit windows of two peaks overlap
};

// Per-oscillator amplitudes and phases from a multi-tone ringdown, normalized
// into a modeshape. Expected tone positions and nominal rates select the fit
// windows.
inline ModeshapeEstimate extract_modeshape(const RingdownRecord& rec,
                                           const std::vector<double>& expected_omegas,
                                           const std::vector<double>& expected_rates,
                                           double window_linewidths = 10.0) {
    rec.validate();
    if (expected_omegas.empty() || expected_omegas.size() != expected_rates.size())
        throw config_error("extract_modeshape: need matching tone and rate lists");

    ModeshapeEstimate out;
    for (std::size_t i = 0; i < expected_omegas.size(); ++i)
        for (std::size_t j = i + 1; j < expected_omegas.size(); ++j) {
            const double sep = std::abs(expected_omegas[i] - expected_omegas[j]);
            const double need = window_linewidths *
                                (expected_rates[i] + expected_rates[j]);
            if (sep < need) out.overlap_warning = true;
        }

    for (std::size_t i = 0; i < expected_omegas.size(); ++i)
        out.peaks.push_back(fit_ringdown_peak(rec, expected_omegas[i],
                                              expected_rates[i], window_linewidths));

    const std::size_t n = out.peaks.size();
    out.shape.resize(n);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        norm2 += out.peaks[i].amplitude * out.peaks[i].amplitude;
    if (norm2 <= 0) throw fit_error("extract_modeshape: all amplitudes vanish");
    out.reference_index = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (out.peaks[i].amplitude > out.peaks[out.reference_index].amplitude)
            out.reference_index = int(i);
    const double phi_ref = out.peaks[out.reference_index].phase;
    for (std::size_t i = 0; i < n; ++i)
        out.shape(i) = out.peaks[i].amplitude / std::sqrt(norm2) *
                       std::exp(cplx(0.0, out.peaks[i].phase - phi_ref));
    return out;
}

// ---------------------------------------------------------------------------
// Full excite-and-release protocol on the linearized model.

struct ModeshapeProtocolResult {
    Eigen::VectorXcd excitation;          // mechanical amplitudes after the drive
    RingdownRecord record;                // demodulated low-power ringdown
    std::vector<double> readout_omegas;   // dressed per-oscillator tones
    std::vector<double> readout_rates;    // dressed per-oscillator linewidths
    ModeshapeEstimate estimate;
};

// Drive the cavity at the target collective frequency until the steady state
// (the long-pulse limit of the two-tone beat drive), then release and record
// the beat of the individual oscillators at a low readout power where the
// eigenmodes are site-localized.
inline ModeshapeProtocolResult simulate_modeshape_protocol(
    const MechanicalParams& mech, const CavityParams& cav,
    const PumpContext& pump_drive, const PumpContext& pump_readout,
    double drive_omega, double dt, std::size_t n_samples,
    double noise_sigma = 0.0, std::uint64_t seed = 0) {
    mech.validate();
    cav.validate();
    const std::size_t n = mech.size();

    // steady-state response to a unit coherent cavity input
    const Eigen::MatrixXcd M_hi = dynamical_matrix(mech, cav, pump_drive);
    const int dim = int(n) + 1;
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(dim);
    e0(0) = 1.0;
    Eigen::MatrixXcd A =
        cplx(0.0, -drive_omega) * Eigen::MatrixXcd::Identity(dim, dim) - M_hi;
    Eigen::VectorXcd x = A.lu().solve(e0);

    ModeshapeProtocolResult out;
    out.excitation = x.segment(1, n);

    // site-localized readout modes: match low-power eigenmodes to oscillators
    const auto modes_lo =
        collective_eigenmodes(dynamical_matrix(mech, cav, pump_readout));
    out.readout_omegas.assign(n, 0.0);
    out.readout_rates.assign(n, 0.0);
    std::vector<bool> used(modes_lo.modes.size(), false);
    // skip the cavity-like eigenmode
    int cavity_like = 0;
    for (std::size_t j = 1; j < modes_lo.modes.size(); ++j)
        if (modes_lo.modes[j].cavity_weight > modes_lo.modes[cavity_like].cavity_weight)
            cavity_like = int(j);
    used[cavity_like] = true;
    for (std::size_t i = 0; i < n; ++i) {
        int best = -1;
        double best_w = -1.0;
        for (std::size_t j = 0; j < modes_lo.modes.size(); ++j) {
            if (used[j]) continue;
            const double wgt = std::abs(modes_lo.modes[j].mech_vector(i));
            if (wgt > best_w) {
                best_w = wgt;
                best = int(j);
            }
        }
        used[best] = true;
        out.readout_omegas[i] = modes_lo.modes[best].frequency;
        out.readout_rates[i] = modes_lo.modes[best].linewidth;
    }

    // demodulate around the mechanical band center so the tones stay well
    // inside Nyquist for slow sampling rates
    const double band = *std::min_element(out.readout_omegas.begin(),
                                          out.readout_omegas.end());
    std::vector<RingdownComponent> comps(n);
    for (std::size_t i = 0; i < n; ++i) {
        comps[i].amplitude = std::abs(out.excitation(i));
        comps[i].phase = std::arg(out.excitation(i));
        comps[i].omega = out.readout_omegas[i] - band;
        comps[i].rate = out.readout_rates[i];
    }
    // offset tones away from zero frequency
    const double span = *std::max_element(out.readout_omegas.begin(),
                                          out.readout_omegas.end()) - band;
    const double base = std::min(0.25 * pi / dt, std::max(span, 1.0));
    for (auto& c : comps) c.omega += base;
    out.record = synthesize_ringdown(comps, dt, n_samples, noise_sigma, seed);

    std::vector<double> tone_guess(n), rate_guess(n);
    for (std::size_t i = 0; i < n; ++i) {
        tone_guess[i] = comps[i].omega;
        rate_guess[i] = out.readout_rates[i];
    }
    out.estimate = extract_modeshape(out.record, tone_guess, rate_guess);
    return out;
}

}  // namespace hexamer

#endif
