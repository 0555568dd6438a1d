#ifndef HEXAMER_ESTIMATION_HPP
#define HEXAMER_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hexamer/common.hpp"
#include "hexamer/dynamics.hpp"
#include "hexamer/optim.hpp"
#include "hexamer/quadrature.hpp"
#include "hexamer/spectra.hpp"

namespace hexamer {

// Common fit artifact: named parameters, their covariance, and bookkeeping.
struct FitReport {
    std::vector<std::string> names;  // labels; angular frequencies in rad/s
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    double residual_norm2 = 0.0;
    bool converged = false;
    int iterations = 0;
    int mc_samples = 0;  // nonzero for Monte Carlo ensembles
};

namespace detail {

inline FitReport make_report(const LeastSquaresResult& r,
                             std::vector<std::string> names) {
    FitReport out;
    out.names = std::move(names);
    out.params = r.params;
    out.covariance = r.covariance;
    out.residual_norm2 = r.residual_norm2;
    out.converged = r.converged;
    out.iterations = r.iterations;
    return out;
}

// Levenberg-Marquardt with per-parameter scales, so the finite-difference
// Jacobian operates on O(1) variables even when the parameters mix rad/s
// frequencies with dimensionless phases.
inline LeastSquaresResult scaled_levenberg_marquardt(const ResidualFn& f,
                                                     const Eigen::VectorXd& x0,
                                                     const Eigen::VectorXd& scales,
                                                     LeastSquaresOptions opt = {}) {
    if (scales.size() != x0.size())
        throw config_error("fit: scale vector length mismatch");
    for (int i = 0; i < scales.size(); ++i)
        if (!(scales[i] > 0))
            throw config_error("fit: parameter scales must be positive");
    auto fs = [&](const Eigen::VectorXd& u) {
        return f(u.cwiseProduct(scales));
    };
    LeastSquaresResult r =
        levenberg_marquardt(fs, x0.cwiseQuotient(scales), opt);
    r.params = r.params.cwiseProduct(scales);
    r.covariance = scales.asDiagonal() * r.covariance * scales.asDiagonal();
    return r;
}

inline void check_trace(const std::vector<double>& freq, std::size_t n_values,
                        const char* who) {
    if (freq.size() != n_values || freq.size() < 4)
        throw config_error(std::string(who) + ": trace needs matching "
                           "frequency/value arrays with at least 4 samples");
    require_increasing(freq, who);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Multi-window transparency (OMIT) fit.

struct OmitFitResult {
    std::vector<double> g;   // rad/s, dressed couplings (magnitudes)
    double kappa = 0.0;      // rad/s, total cavity linewidth
    double detuning = 0.0;   // rad/s, pump-cavity detuning
    std::vector<bool> g_at_zero;  // coupling indistinguishable from zero
    FitReport report;
};

// Fit the reflection model 1 - kappa_ex / D(w) to a complex trace with the
// mechanical frequencies and damping rates held fixed. Free parameters:
// the couplings g_i, the total cavity linewidth, and the pump detuning
// (which also absorbs any cavity frequency shift at this pump power).
inline OmitFitResult fit_omit(const ComplexSpectrum& trace,
                              const MechanicalParams& mech, double kappa_ex,
                              const std::vector<double>& g_guess,
                              double kappa_guess, double detuning_guess) {
    mech.validate();
    detail::check_trace(trace.freq, trace.value.size(), "fit_omit");
    const std::size_t n = mech.size();
    if (g_guess.size() != n)
        throw config_error("fit_omit: need one coupling guess per oscillator");
    if (kappa_ex <= 0 || kappa_guess <= kappa_ex)
        throw config_error("fit_omit: require 0 < kappa_ex < kappa");

    const std::size_t m = trace.freq.size();
    auto residuals = [&](const Eigen::VectorXd& p) {
        PumpContext pump;
        pump.detuning = p[n + 1];
        pump.g.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) pump.g[i] = p[i];
        CavityParams cav;
        cav.kappa_ex = kappa_ex;
        cav.kappa_0 = p[n] - kappa_ex;
        Eigen::VectorXd r(2 * m);
        for (std::size_t j = 0; j < m; ++j) {
            const cplx d = omit_reflection(trace.freq[j], mech, cav, pump) -
                           trace.value[j];
            r[2 * j] = d.real();
            r[2 * j + 1] = d.imag();
        }
        return r;
    };

    Eigen::VectorXd x0(n + 2), scales(n + 2);
    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) gmax = std::max(gmax, g_guess[i]);
    for (std::size_t i = 0; i < n; ++i) {
        x0[i] = g_guess[i];
        scales[i] = std::max(g_guess[i], 0.05 * std::max(gmax, kappa_guess));
    }
    x0[n] = kappa_guess;
    scales[n] = kappa_guess;
    x0[n + 1] = detuning_guess;
    scales[n + 1] = std::max(std::abs(detuning_guess), kappa_guess);

    auto r = detail::scaled_levenberg_marquardt(residuals, x0, scales);
    if (!r.converged) throw fit_error("fit_omit: no convergence");

    OmitFitResult out;
    out.report = detail::make_report(r, [&] {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i)
            names.push_back("g_" + std::to_string(i + 1));
        names.push_back("kappa");
        names.push_back("detuning");
        return names;
    }());
    out.kappa = r.params[n];
    out.detuning = r.params[n + 1];
    double fitted_max = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        fitted_max = std::max(fitted_max, std::abs(r.params[i]));
    for (std::size_t i = 0; i < n; ++i) {
        out.g.push_back(std::abs(r.params[i]));  // model depends on g^2 only
        out.g_at_zero.push_back(std::abs(r.params[i]) <= 1e-4 * fitted_max);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output-spectrum fit with Monte Carlo propagation of systematic priors.

struct PsdPriors {
    double kappa_ex = 0.0;            // rad/s, mean of the uncertain value
    double kappa_ex_rel_sigma = 0.1;  // fractional 1-sigma
    double n_add = 0.0;               // chain added noise, device referred
    double n_add_sigma = 0.0;
};

struct PsdFitGuess {
    std::vector<double> n_mech;  // thermal bath occupations Gamma_th,i / Gamma_m,i
    double kappa = 0.0;          // rad/s
    double detuning = 0.0;       // rad/s
    std::vector<double> g;       // rad/s
};

struct PsdMonteCarloOptions {
    int n_rep = 200;
    unsigned long long seed = 1;
    double n_cavity = 0.0;             // fixed cavity-bath occupation
    bool compute_occupations = false;  // diagonalize the covariance per draw
    CovarianceOptions covariance;
};

struct PsdMonteCarloResult {
    std::vector<std::string> names;  // n_mech_i.., kappa, detuning, g_i..
    Eigen::VectorXd mean, stddev, std_error;  // std_error = stddev / sqrt(N)
    std::vector<double> occupation_mean, occupation_std, occupation_std_error;
    int n_success = 0;
    int n_divergent = 0;
    bool divergence_warning = false;  // more than 10% of the draws failed
    FitReport report;                 // ensemble means; covariance diag(stddev^2)
};

// Fit the device-referred output spectrum with {n_mech,i, kappa, detuning,
// g_i} free, repeating the fit over Gaussian draws of the systematically
// uncertain kappa_ex and chain added noise. The detected trace is converted
// to device units per draw: the floor G (1 + n_add) fixes the scale (the
// model spectrum never dips below the vacuum 1/2, so the trace minimum is
// the floor for a noiseless synthetic).
inline PsdMonteCarloResult fit_psd_montecarlo(const RealSpectrum& detected,
                                              const MechanicalParams& mech,
                                              const PsdPriors& priors,
                                              const PsdFitGuess& guess,
                                              const PsdMonteCarloOptions& opt = {}) {
    mech.validate();
    detail::check_trace(detected.freq, detected.value.size(), "fit_psd");
    const std::size_t n = mech.size();
    if (guess.n_mech.size() != n || guess.g.size() != n)
        throw config_error("fit_psd: guess vectors must match the oscillator count");
    if (priors.kappa_ex <= 0 || priors.kappa_ex_rel_sigma < 0 || priors.n_add < 0 ||
        priors.n_add_sigma < 0)
        throw config_error("fit_psd: invalid priors");
    if (opt.n_rep < 1) throw config_error("fit_psd: n_rep must be positive");

    const double floor = *std::min_element(detected.value.begin(), detected.value.end());
    if (floor <= 0) throw config_error("fit_psd: detected trace must be positive");

    const std::size_t m = detected.freq.size();
    const int np = int(2 * n + 2);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Eigen::VectorXd> draws;
    std::vector<std::vector<double>> occ_draws;
    int divergent = 0;
    for (int rep = 0; rep < opt.n_rep; ++rep) {
        const double z1 = gauss(rng), z2 = gauss(rng);
        const double kex = priors.kappa_ex *
                           std::max(1e-3, 1.0 + priors.kappa_ex_rel_sigma * z1);
        const double nadd = std::max(0.0, priors.n_add + priors.n_add_sigma * z2);
        const double gain = floor / (1.0 + nadd);

        std::vector<double> s(m);
        for (std::size_t j = 0; j < m; ++j)
            s[j] = detected.value[j] / gain - 0.5 - nadd;

        auto residuals = [&](const Eigen::VectorXd& p) {
            BathOccupations baths;
            baths.n_cavity = opt.n_cavity;
            baths.n_mech.assign(n, 0.0);
            PumpContext pump;
            pump.g.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                baths.n_mech[i] = std::abs(p[i]);
                pump.g[i] = p[2 + n + i];
            }
            CavityParams cav;
            cav.kappa_ex = kex;
            cav.kappa_0 = p[n] - kex;
            pump.detuning = p[n + 1];
            Eigen::VectorXd r(m);
            for (std::size_t j = 0; j < m; ++j)
                r[j] = output_psd(detected.freq[j], mech, cav, pump, baths) - s[j];
            return r;
        };

        Eigen::VectorXd x0(np), scales(np);
        for (std::size_t i = 0; i < n; ++i) {
            x0[i] = guess.n_mech[i];
            scales[i] = std::max(guess.n_mech[i], 1.0);
            x0[2 + n + i] = guess.g[i];
            scales[2 + n + i] = std::max(guess.g[i], 0.05 * guess.kappa);
        }
        x0[n] = guess.kappa;
        scales[n] = guess.kappa;
        x0[n + 1] = guess.detuning;
        scales[n + 1] = std::max(std::abs(guess.detuning), guess.kappa);

        try {
            auto r = detail::scaled_levenberg_marquardt(residuals, x0, scales);
            if (!r.converged) throw fit_error("draw diverged");
            for (std::size_t i = 0; i < n; ++i) {
                r.params[i] = std::abs(r.params[i]);
                r.params[2 + n + i] = std::abs(r.params[2 + n + i]);
            }
            if (opt.compute_occupations) {
                BathOccupations baths;
                baths.n_cavity = opt.n_cavity;
                for (std::size_t i = 0; i < n; ++i)
                    baths.n_mech.push_back(r.params[i]);
                PumpContext pump;
                pump.detuning = r.params[n + 1];
                for (std::size_t i = 0; i < n; ++i)
                    pump.g.push_back(r.params[2 + n + i]);
                CavityParams cav;
                cav.kappa_ex = kex;
                cav.kappa_0 = r.params[n] - kex;
                cav.omega_c = 1.0;  // unused by the covariance integrals
                auto cov = covariance_matrix(mech, cav, pump, baths, opt.covariance);
                occ_draws.push_back(collective_occupations(cov.matrix).occupations);
            }
            draws.push_back(r.params);
        } catch (const std::exception&) {
            ++divergent;
        }
    }

    PsdMonteCarloResult out;
    out.n_success = int(draws.size());
    out.n_divergent = divergent;
    out.divergence_warning = divergent * 10 > opt.n_rep;
    if (draws.empty()) throw fit_error("fit_psd: every Monte Carlo draw diverged");

    const double cnt = double(draws.size());
    out.mean = Eigen::VectorXd::Zero(np);
    for (const auto& d : draws) out.mean += d;
    out.mean /= cnt;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(np);
    for (const auto& d : draws) var += (d - out.mean).cwiseAbs2();
    out.stddev = (var / std::max(1.0, cnt - 1.0)).cwiseSqrt();
    out.std_error = out.stddev / std::sqrt(cnt);

    for (std::size_t i = 0; i < n; ++i) out.names.push_back("n_mech_" + std::to_string(i + 1));
    out.names.push_back("kappa");
    out.names.push_back("detuning");
    for (std::size_t i = 0; i < n; ++i) out.names.push_back("g_" + std::to_string(i + 1));

    if (!occ_draws.empty()) {
        const std::size_t k = occ_draws.front().size();
        out.occupation_mean.assign(k, 0.0);
        out.occupation_std.assign(k, 0.0);
        out.occupation_std_error.assign(k, 0.0);
        for (const auto& o : occ_draws)
            for (std::size_t i = 0; i < k; ++i) out.occupation_mean[i] += o[i];
        for (std::size_t i = 0; i < k; ++i) out.occupation_mean[i] /= cnt;
        for (const auto& o : occ_draws)
            for (std::size_t i = 0; i < k; ++i) {
                const double d = o[i] - out.occupation_mean[i];
                out.occupation_std[i] += d * d;
            }
        for (std::size_t i = 0; i < k; ++i) {
            out.occupation_std[i] =
                std::sqrt(out.occupation_std[i] / std::max(1.0, cnt - 1.0));
            out.occupation_std_error[i] = out.occupation_std[i] / std::sqrt(cnt);
        }
    }

    out.report.names = out.names;
    out.report.params = out.mean;
    out.report.covariance = out.stddev.cwiseAbs2().asDiagonal();
    out.report.converged = true;
    out.report.mc_samples = out.n_success;
    return out;
}

// ---------------------------------------------------------------------------
// Reflection background removal.

// Amplitude-only background: a Lorentzian-like bump from the coupler loop
// plus a standing-wave ripple and an offset. The ripple phase is referenced
// to omega_ref (the grid center) to keep the fit well conditioned.
struct ReflectionBackground {
    double a = 0.0;       // Lorentzian weight
    double gamma = 1.0;   // rad/s, Lorentzian half width
    double omega = 0.0;   // rad/s, Lorentzian center
    double b = 0.0;       // ripple amplitude
    double c = 0.0;       // ripple rate, rad per (rad/s)
    double phi0 = 0.0;    // ripple phase at omega_ref
    double d = 1.0;       // offset
    double omega_ref = 0.0;

    double eval(double w) const {
        const double u = (w - omega) / gamma;
        return a / (pi * gamma * (1.0 + u * u)) +
               b * std::cos(c * (w - omega_ref) + phi0) + d;
    }
};

// Complex reflection dip with residual electrical delay:
//   exp(i (w - omega_ref) tau - i alpha) *
//   (1 - 2 kappa_ex e^{i phi} / (kappa_ex + kappa_0 + 2 i (w - omega_0)))
struct ReflectionResonance {
    double kappa_ex = 0.0;
    double kappa_0 = 0.0;
    double omega_0 = 0.0;
    double phi = 0.0;    // impedance-mismatch rotation of the dip
    double tau = 0.0;    // s, residual delay
    double alpha = 0.0;  // global phase at omega_ref
    double omega_ref = 0.0;

    cplx eval(double w) const {
        const cplx dip = 1.0 - 2.0 * kappa_ex * std::exp(cplx(0.0, phi)) /
                                   cplx(kappa_ex + kappa_0, 2.0 * (w - omega_0));
        return std::exp(cplx(0.0, (w - omega_ref) * tau - alpha)) * dip;
    }
};

inline cplx simple_s11(double w, double kappa_ex, double kappa_0, double omega_0) {
    return 1.0 - 2.0 * kappa_ex / cplx(kappa_ex + kappa_0, 2.0 * (w - omega_0));
}

// Transmission-configuration background for modes too broad to separate from
// the background: a through-resonator line plus ripple and offset.
struct TransmissionBackground {
    double amp = 0.0;     // lumped A sqrt(kappa_i kappa_e)
    double kappa = 1.0;   // rad/s, background resonance linewidth
    double omega = 0.0;   // rad/s, background resonance center
    double tau = 0.0;     // s, delay
    double alpha = 0.0;   // phase at omega_ref
    double b = 0.0, c = 0.0, phi0 = 0.0, d = 0.0;  // ripple and offset
    double omega_ref = 0.0;

    cplx eval(double w) const {
        return amp * std::exp(cplx(0.0, (w - omega_ref) * tau - alpha)) /
                   cplx(kappa, 2.0 * (w - omega)) +
               b * std::cos(c * (w - omega_ref) + phi0) + d;
    }
};

struct BackgroundRemoval {
    ComplexSpectrum normalized;               // raw divided by the background
    ReflectionBackground background;          // narrow-mode path
    TransmissionBackground broad_background;  // broad-mode path
    ReflectionResonance resonance;
    bool fano_suspect = false;   // fit drove a decay rate negative
    bool overcoupled = false;    // kappa_ex > kappa_0
    FitReport report;            // resonance-stage fit
};

namespace detail {

inline void classify_rates(BackgroundRemoval& out) {
    out.fano_suspect =
        out.resonance.kappa_ex < 0 || out.resonance.kappa_0 < 0;
    out.overcoupled =
        !out.fano_suspect && out.resonance.kappa_ex > out.resonance.kappa_0;
}

inline ReflectionResonance fit_resonance_stage(const ComplexSpectrum& trace,
                                               const ReflectionResonance& guess,
                                               FitReport& report) {
    const std::size_t m = trace.freq.size();
    const double span = trace.freq.back() - trace.freq.front();
    auto residuals = [&](const Eigen::VectorXd& p) {
        ReflectionResonance r = guess;
        r.kappa_ex = p[0];
        r.kappa_0 = p[1];
        r.omega_0 = p[2];
        r.phi = p[3];
        r.tau = p[4];
        r.alpha = p[5];
        Eigen::VectorXd res(2 * m);
        for (std::size_t j = 0; j < m; ++j) {
            const cplx d = r.eval(trace.freq[j]) - trace.value[j];
            res[2 * j] = d.real();
            res[2 * j + 1] = d.imag();
        }
        return res;
    };
    Eigen::VectorXd x0(6), scales(6);
    x0 << guess.kappa_ex, guess.kappa_0, guess.omega_0, guess.phi, guess.tau,
        guess.alpha;
    scales << std::max(std::abs(guess.kappa_ex), span / 100.0),
        std::max(std::abs(guess.kappa_0), span / 100.0), span, 1.0,
        1.0 / span, 1.0;
    auto r = scaled_levenberg_marquardt(residuals, x0, scales);
    if (!r.converged) throw fit_error("remove_background: resonance fit failed");
    report = make_report(r, {"kappa_ex", "kappa_0", "omega_0", "phi", "tau",
                             "alpha"});
    ReflectionResonance fit = guess;
    fit.kappa_ex = r.params[0];
    fit.kappa_0 = r.params[1];
    fit.omega_0 = r.params[2];
    fit.phi = r.params[3];
    fit.tau = r.params[4];
    fit.alpha = r.params[5];
    return fit;
}

}  // namespace detail

// Narrow-mode background removal: the resonance is far narrower than the
// background features, so the background amplitude is fitted with a window
// around the dip masked out, the trace is divided by it, and the complex
// resonance model is fitted to the normalized data.
inline BackgroundRemoval remove_background_narrow(const ComplexSpectrum& raw,
                                                  const ReflectionBackground& bg_guess,
                                                  const ReflectionResonance& res_guess,
                                                  double mask_fraction = 0.1) {
    detail::check_trace(raw.freq, raw.value.size(), "remove_background");
    if (mask_fraction <= 0 || mask_fraction >= 0.8)
        throw config_error("remove_background: mask fraction out of range");
    const std::size_t m = raw.freq.size();
    const double span = raw.freq.back() - raw.freq.front();

    // center the mask on the resonance feature: the strongest amplitude
    // excursion from the median level (a dip, or a peak under Fano
    // interference)
    std::vector<double> mag(m);
    for (std::size_t j = 0; j < m; ++j) mag[j] = std::abs(raw.value[j]);
    std::vector<double> sorted = mag;
    std::nth_element(sorted.begin(), sorted.begin() + m / 2, sorted.end());
    const double med = sorted[m / 2];
    std::size_t dip = 0;
    for (std::size_t j = 1; j < m; ++j)
        if (std::abs(mag[j] - med) > std::abs(mag[dip] - med)) dip = j;
    const double w_dip = raw.freq[dip];

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < m; ++j)
        if (std::abs(raw.freq[j] - w_dip) > 0.5 * mask_fraction * span)
            keep.push_back(j);
    if (keep.size() < 10)
        throw config_error("remove_background: mask leaves too few samples");

    auto bg_residuals = [&](const Eigen::VectorXd& p) {
        ReflectionBackground bg = bg_guess;
        bg.a = p[0];
        bg.gamma = p[1];
        bg.omega = p[2];
        bg.b = p[3];
        bg.c = p[4];
        bg.phi0 = p[5];
        bg.d = p[6];
        Eigen::VectorXd r(keep.size());
        for (std::size_t j = 0; j < keep.size(); ++j)
            r[j] = bg.eval(raw.freq[keep[j]]) - std::abs(raw.value[keep[j]]);
        return r;
    };
    double level = 0.0;
    for (std::size_t j : keep) level = std::max(level, std::abs(raw.value[j]));
    Eigen::VectorXd x0(7), scales(7);
    x0 << bg_guess.a, bg_guess.gamma, bg_guess.omega, bg_guess.b, bg_guess.c,
        bg_guess.phi0, bg_guess.d;
    scales << std::max(std::abs(bg_guess.a), level * span / 4.0),
        std::max(std::abs(bg_guess.gamma), span / 10.0), span,
        std::max(std::abs(bg_guess.b), 0.1 * level),
        std::max(std::abs(bg_guess.c), two_pi / span), 1.0,
        std::max(std::abs(bg_guess.d), level);
    auto bg_fit = detail::scaled_levenberg_marquardt(bg_residuals, x0, scales);
    if (!bg_fit.converged)
        throw fit_error("remove_background: background fit failed");

    BackgroundRemoval out;
    out.background = bg_guess;
    out.background.a = bg_fit.params[0];
    out.background.gamma = bg_fit.params[1];
    out.background.omega = bg_fit.params[2];
    out.background.b = bg_fit.params[3];
    out.background.c = bg_fit.params[4];
    out.background.phi0 = bg_fit.params[5];
    out.background.d = bg_fit.params[6];

    out.normalized.freq = raw.freq;
    out.normalized.value.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double bg = out.background.eval(raw.freq[j]);
        if (!(bg > 0))
            throw numerical_error("remove_background: fitted background "
                                  "is not positive over the trace");
        out.normalized.value.push_back(raw.value[j] / bg);
    }

    out.resonance = detail::fit_resonance_stage(out.normalized, res_guess, out.report);
    detail::classify_rates(out);
    return out;
}

// Broad-mode background removal: the resonance linewidth is comparable to
// the background features, so the background and the resonance are fitted
// jointly on the complex trace.
inline BackgroundRemoval remove_background_broad(const ComplexSpectrum& raw,
                                                 const TransmissionBackground& bg_guess,
                                                 const ReflectionResonance& res_guess) {
    detail::check_trace(raw.freq, raw.value.size(), "remove_background");
    const std::size_t m = raw.freq.size();
    const double span = raw.freq.back() - raw.freq.front();
    double level = 0.0;
    for (const cplx& v : raw.value) level = std::max(level, std::abs(v));

    auto build = [&](const Eigen::VectorXd& p, TransmissionBackground& bg,
                     ReflectionResonance& res) {
        bg = bg_guess;
        bg.amp = p[0];
        bg.kappa = p[1];
        bg.omega = p[2];
        bg.tau = p[3];
        bg.alpha = p[4];
        bg.b = p[5];
        bg.c = p[6];
        bg.phi0 = p[7];
        bg.d = p[8];
        res = res_guess;
        res.kappa_ex = p[9];
        res.kappa_0 = p[10];
        res.omega_0 = p[11];
        res.phi = p[12];
        res.tau = 0.0;  // delay lives in the background factor here
        res.alpha = 0.0;
    };
    auto residuals = [&](const Eigen::VectorXd& p) {
        TransmissionBackground bg;
        ReflectionResonance res;
        build(p, bg, res);
        Eigen::VectorXd r(2 * m);
        for (std::size_t j = 0; j < m; ++j) {
            const cplx d =
                bg.eval(raw.freq[j]) * res.eval(raw.freq[j]) - raw.value[j];
            r[2 * j] = d.real();
            r[2 * j + 1] = d.imag();
        }
        return r;
    };

    Eigen::VectorXd x0(13), scales(13);
    x0 << bg_guess.amp, bg_guess.kappa, bg_guess.omega, bg_guess.tau,
        bg_guess.alpha, bg_guess.b, bg_guess.c, bg_guess.phi0, bg_guess.d,
        res_guess.kappa_ex, res_guess.kappa_0, res_guess.omega_0, res_guess.phi;
    scales << std::max(std::abs(bg_guess.amp), level * span),
        std::max(std::abs(bg_guess.kappa), span), span,
        1.0 / span, 1.0,
        std::max(std::abs(bg_guess.b), 0.1 * level),
        std::max(std::abs(bg_guess.c), two_pi / span), 1.0,
        std::max(std::abs(bg_guess.d), 0.1 * level),
        std::max(std::abs(res_guess.kappa_ex), span / 100.0),
        std::max(std::abs(res_guess.kappa_0), span / 100.0), span, 1.0;
    auto r = detail::scaled_levenberg_marquardt(residuals, x0, scales);
    if (!r.converged) throw fit_error("remove_background: joint fit failed");

    BackgroundRemoval out;
    ReflectionResonance res;
    build(r.params, out.broad_background, res);
    out.resonance = res;
    out.report = detail::make_report(
        r, {"amp", "kappa_bg", "omega_bg", "tau", "alpha", "b", "c", "phi0",
            "d", "kappa_ex", "kappa_0", "omega_0", "phi"});

    out.normalized.freq = raw.freq;
    out.normalized.value.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        const cplx bg = out.broad_background.eval(raw.freq[j]);
        if (std::abs(bg) < 1e-12 * level)
            throw numerical_error("remove_background: background vanishes "
                                  "over the trace");
        out.normalized.value.push_back(raw.value[j] / bg);
    }
    detail::classify_rates(out);
    return out;
}

// ---------------------------------------------------------------------------
// Kerr-shifted cavity response.

struct KerrCavity {
    double kappa_ex = 0.0;         // rad/s
    double kappa_0 = 0.0;          // rad/s
    double omega_c = 0.0;          // rad/s
    double kerr = 0.0;             // rad/s per photon (any sign)
    double attenuation_db = 50.0;  // source-to-device line attenuation

    double kappa() const { return kappa_ex + kappa_0; }

    void validate() const {
        if (kappa_ex <= 0 || kappa_0 < 0 || omega_c <= 0)
            throw config_error("kerr: invalid cavity parameters");
        if (attenuation_db < 0)
            throw config_error("kerr: attenuation must be nonnegative");
    }
};

// Photon flux reaching the device for a given source power.
inline double kerr_drive_flux(const KerrCavity& cav, double source_power_watts) {
    cav.validate();
    if (source_power_watts < 0)
        throw config_error("kerr: drive power must be nonnegative");
    return source_power_watts * std::pow(10.0, -cav.attenuation_db / 10.0) /
           (hbar * cav.omega_c);
}

// Positive real roots of the steady-state photon-number cubic
//   K^2 n^3 - 2 d K n^2 + (d^2 + kappa^2/4) n = kappa_ex * flux,
// with d = omega - omega_c. Ascending order; one entry when monostable,
// three inside a bistable band.
inline std::vector<double> kerr_photon_roots(const KerrCavity& cav, double omega,
                                             double flux) {
    cav.validate();
    if (flux < 0) throw config_error("kerr: flux must be nonnegative");
    const double d = omega - cav.omega_c;
    const double k2 = cav.kappa() * cav.kappa() / 4.0;
    const double rhs = cav.kappa_ex * flux;
    if (cav.kerr == 0.0) return {rhs / (d * d + k2)};

    // monic companion form; the roots sit near rhs / (d^2 + k2) in scale
    const double K = cav.kerr;
    const double p2 = -2.0 * d / K;
    const double p1 = (d * d + k2) / (K * K);
    const double p0 = -rhs / (K * K);
    Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    comp(0, 2) = -p0;
    comp(1, 2) = -p1;
    comp(2, 2) = -p2;
    Eigen::EigenSolver<Eigen::Matrix3d> es(comp);
    if (es.info() != Eigen::Success)
        throw numerical_error("kerr: cubic root solve failed");
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        scale = std::max(scale, std::abs(es.eigenvalues()[i]));
    std::vector<double> roots;
    for (int i = 0; i < 3; ++i) {
        const cplx z = es.eigenvalues()[i];
        if (std::abs(z.imag()) <= 1e-9 * scale && z.real() > 0)
            roots.push_back(z.real());
    }
    std::sort(roots.begin(), roots.end());
    // collapse numerically coincident roots (exact bistability edge)
    std::vector<double> out;
    for (double x : roots)
        if (out.empty() || x - out.back() > 1e-9 * scale) out.push_back(x);
    if (out.empty())
        throw numerical_error("kerr: no positive real photon-number root");
    return out;
}

struct KerrTrace {
    double source_power_watts = 0.0;
    double flux = 0.0;              // photons/s at the device
    std::vector<double> photons;    // physical branch (lowest root) per point
    std::vector<int> root_count;    // 1 or 3 per point
    bool bistable = false;
    ComplexSpectrum s11;
};

// Reflection sweep at one drive power: per probe frequency solve the cubic,
// take the lowest positive branch, and evaluate the Kerr-shifted dip.
inline KerrTrace kerr_trace(const KerrCavity& cav, const std::vector<double>& omega,
                            double source_power_watts) {
    cav.validate();
    require_increasing(omega, "kerr_trace");
    KerrTrace out;
    out.source_power_watts = source_power_watts;
    out.flux = kerr_drive_flux(cav, source_power_watts);
    out.s11.freq = omega;
    for (double w : omega) {
        auto roots = kerr_photon_roots(cav, w, out.flux);
        const double n = roots.front();
        out.photons.push_back(n);
        out.root_count.push_back(int(roots.size()));
        if (roots.size() > 1) out.bistable = true;
        out.s11.value.push_back(
            1.0 - 2.0 * cav.kappa_ex /
                      cplx(cav.kappa(), 2.0 * (w - cav.omega_c - cav.kerr * n)));
    }
    return out;
}

inline std::vector<KerrTrace> kerr_response(const KerrCavity& cav,
                                            const std::vector<double>& omega,
                                            const std::vector<double>& source_powers_watts) {
    std::vector<KerrTrace> out;
    out.reserve(source_powers_watts.size());
    for (double p : source_powers_watts) out.push_back(kerr_trace(cav, omega, p));
    return out;
}

namespace detail {

// discriminant of K^2 n^3 - 2dK n^2 + (d^2 + kappa^2/4) n - kappa_ex flux;
// positive iff three distinct real roots
inline double kerr_discriminant(const KerrCavity& cav, double d, double flux) {
    const double a = cav.kerr * cav.kerr;
    const double b = -2.0 * d * cav.kerr;
    const double c = d * d + cav.kappa() * cav.kappa() / 4.0;
    const double e = -cav.kappa_ex * flux;
    return 18.0 * a * b * c * e - 4.0 * b * b * b * e + b * b * c * c -
           4.0 * a * c * c * c - 27.0 * a * a * e * e;
}

}  // namespace detail

// Detuning band (relative to omega_c) over which the drive is bistable,
// located as the two zeros of the cubic discriminant.
inline std::pair<double, double> kerr_bistability_edges(const KerrCavity& cav,
                                                        double flux) {
    cav.validate();
    if (cav.kerr == 0.0 || flux <= 0)
        throw config_error("kerr_bistability_edges: need a Kerr term and drive");
    // the shifted resonance sits near d = K n_peak with n_peak the resonant
    // linear estimate; scan generously around it
    const double n_peak = 4.0 * cav.kappa_ex * flux / (cav.kappa() * cav.kappa());
    const double reach = cav.kerr * n_peak;
    const double lo = std::min(0.0, 2.0 * reach) - 5.0 * cav.kappa();
    const double hi = std::max(0.0, 2.0 * reach) + 5.0 * cav.kappa();
    const int n_scan = 4000;
    std::vector<double> zeros;
    double prev_d = lo, prev_v = detail::kerr_discriminant(cav, lo, flux);
    for (int i = 1; i <= n_scan; ++i) {
        const double d = lo + (hi - lo) * double(i) / n_scan;
        const double v = detail::kerr_discriminant(cav, d, flux);
        if ((prev_v <= 0) != (v <= 0)) {
            double a = prev_d, b = d, fa = prev_v;
            for (int it = 0; it < 80; ++it) {
                const double mdl = 0.5 * (a + b);
                const double fm = detail::kerr_discriminant(cav, mdl, flux);
                if ((fa <= 0) != (fm <= 0)) b = mdl;
                else { a = mdl; fa = fm; }
            }
            zeros.push_back(0.5 * (a + b));
        }
        prev_d = d;
        prev_v = v;
    }
    if (zeros.size() != 2)
        throw numerical_error("kerr_bistability_edges: drive is not bistable");
    return {zeros[0], zeros[1]};
}

// ---------------------------------------------------------------------------
// Noise-floor calibration against a temperature sweep.

struct NoiseFloorFit {
    double gain = 0.0;
    double n_add_amp = 0.0;      // referred to the amplifier input
    bool linear_regime = false;  // every temperature sits above the Bose knee
    FitReport report;
};

// Fit detected broadband power P(T) = G (n_th(omega, T) + n_add + 1) for one
// frequency section; linear in (G, G (n_add + 1)).
inline NoiseFloorFit calibrate_noise_floor_section(const std::vector<double>& temps_kelvin,
                                                   const std::vector<double>& powers,
                                                   double omega) {
    if (temps_kelvin.size() != powers.size() || temps_kelvin.size() < 4)
        throw config_error("noise_floor: need at least 4 matched temperature points");
    const std::size_t m = temps_kelvin.size();
    double pmin = powers[0], pmax = powers[0];
    for (double p : powers) {
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
    }
    if (pmax - pmin <= 1e-12 * std::max(1.0, std::abs(pmax)))
        throw fit_error("noise_floor: powers carry no temperature dependence");

    Eigen::MatrixXd X(m, 2);
    Eigen::VectorXd y(m);
    double nth_min = std::numeric_limits<double>::infinity();
    double nth_max = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double nth = thermal_occupation(omega, temps_kelvin[j]);
        X(j, 0) = nth;
        X(j, 1) = 1.0;
        y[j] = powers[j];
        nth_min = std::min(nth_min, nth);
        nth_max = std::max(nth_max, nth);
    }
    if (nth_max - nth_min <= 1e-12 * std::max(1.0, nth_max))
        throw fit_error("noise_floor: temperatures are degenerate");

    auto r = linear_least_squares(X, y);
    NoiseFloorFit out;
    out.gain = r.params[0];
    if (out.gain <= 0)
        throw fit_error("noise_floor: fitted gain is not positive");
    out.n_add_amp = r.params[1] / out.gain - 1.0;
    out.linear_regime = nth_min > 1.0;  // knee not sampled; offset poorly anchored
    out.report = detail::make_report(r, {"gain", "gain*(n_add+1)"});
    return out;
}

struct ChainNoiseEstimate {
    double n_add = 0.0;       // device-referred added noise
    double n_add_low = 0.0;   // with the loss systematic subtracted
    double n_add_high = 0.0;  // with the loss systematic added
};

// Refer the amplifier added noise to the device through the chain loss
// (positive dB), with a symmetric systematic on the loss.
inline ChainNoiseEstimate refer_added_noise(double n_add_amp, double loss_db,
                                            double loss_sys_db = 0.5) {
    if (loss_db < 0 || loss_sys_db < 0)
        throw config_error("refer_added_noise: losses must be nonnegative dB");
    auto ref = [&](double db) {
        const double eta = std::pow(10.0, -db / 10.0);
        return (1.0 + n_add_amp) / eta - 1.0;
    };
    ChainNoiseEstimate out;
    out.n_add = ref(loss_db);
    out.n_add_low = ref(std::max(0.0, loss_db - loss_sys_db));
    out.n_add_high = ref(loss_db + loss_sys_db);
    return out;
}

// ---------------------------------------------------------------------------
// Vacuum coupling from a thermal sweep of the motional sidebands.

// Calibrated sideband-to-calibration-tone power ratio at occupation n_m:
//   R = 4 g0^2 n_m (kex/k)^2 / (Om^2 + ((kex - k0)/2)^2) * wc / (wc + Om).
inline double thermal_sideband_ratio(double g0, double n_m, double omega_m,
                                     const CavityParams& cav) {
    cav.validate();
    if (omega_m <= 0) throw config_error("sideband ratio: omega_m must be positive");
    const double kex = cav.kappa_ex, k0 = cav.kappa_0;
    const double frac = kex / cav.kappa();
    const double coeff = frac * frac /
                         (omega_m * omega_m + 0.25 * (kex - k0) * (kex - k0)) *
                         cav.omega_c / (cav.omega_c + omega_m);
    return 4.0 * g0 * g0 * n_m * coeff;
}

// d R / d T under the equipartition substitution n_m = kB T / (hbar Om).
inline double thermal_sideband_slope(double g0, double omega_m,
                                     const CavityParams& cav) {
    return thermal_sideband_ratio(g0, 1.0, omega_m, cav) * k_boltzmann /
           (hbar * omega_m);
}

struct G0Estimate {
    double g0 = 0.0;         // rad/s
    double slope = 0.0;      // ratio per kelvin
    double intercept = 0.0;  // residual offset of the linear fit
    FitReport report;
};

// Linear fit of the calibrated sideband ratio against temperature above
// t_min (equipartition regime); the slope gives g0.
inline G0Estimate g0_from_thermal_sweep(const std::vector<double>& temps_kelvin,
                                        const std::vector<double>& ratios,
                                        double omega_m, const CavityParams& cav,
                                        double t_min = 0.1) {
    cav.validate();
    if (temps_kelvin.size() != ratios.size())
        throw config_error("g0 sweep: temperature/ratio length mismatch");
    std::vector<double> t, y;
    for (std::size_t j = 0; j < temps_kelvin.size(); ++j)
        if (temps_kelvin[j] > t_min) {
            t.push_back(temps_kelvin[j]);
            y.push_back(ratios[j]);
        }
    if (t.size() < 2)
        throw config_error("g0 sweep: need at least 2 points above t_min");

    Eigen::MatrixXd X(t.size(), 2);
    Eigen::VectorXd yy(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
        X(j, 0) = t[j];
        X(j, 1) = 1.0;
        yy[j] = y[j];
    }
    auto r = linear_least_squares(X, yy);
    if (r.params[0] <= 0)
        throw fit_error("g0 sweep: sideband power does not grow with temperature");

    G0Estimate out;
    out.slope = r.params[0];
    out.intercept = r.params[1];
    out.g0 = std::sqrt(out.slope / thermal_sideband_slope(1.0, omega_m, cav));
    out.report = detail::make_report(r, {"slope", "intercept"});
    return out;
}

// ---------------------------------------------------------------------------
// Sideband-asymmetry thermometry.

// Motional-sideband conversion rate through the auxiliary readout cavity:
//   Gamma_pm = 4 g^2 kappa / (kappa^2 + 4 (Omega_m +- Delta)^2),
// the + sign for the anti-Stokes (upper) sideband.
inline double aux_sideband_rate(double g_aux, double kappa_aux, double omega_m,
                                double detuning, bool anti_stokes) {
    if (kappa_aux <= 0 || omega_m <= 0)
        throw config_error("aux_sideband_rate: rates must be positive");
    const double s = anti_stokes ? 1.0 : -1.0;
    const double off = omega_m + s * detuning;
    return 4.0 * g_aux * g_aux * kappa_aux /
           (kappa_aux * kappa_aux + 4.0 * off * off);
}

// Forward model of the calibrated sideband areas (common prefactor dropped):
// anti-Stokes ~ Gamma_+ (n - 2 n_aux), Stokes ~ Gamma_- (n + 1 + 2 n_aux).
inline std::pair<double, double> expected_sideband_areas(double n_m, double n_aux,
                                                         double gamma_plus,
                                                         double gamma_minus) {
    if (gamma_plus <= 0 || gamma_minus <= 0)
        throw config_error("sideband areas: rates must be positive");
    return {gamma_plus * (n_m - 2.0 * n_aux),
            gamma_minus * (n_m + 1.0 + 2.0 * n_aux)};
}

struct AsymmetryEstimate {
    double n_m = 0.0;
    double corrected_ratio = 0.0;      // (A_as / A_s) / (Gamma_+ / Gamma_-)
    bool ground_state_limited = false; // corrected anti-Stokes weight <= 0
};

// Invert the area ratio: with rho = (A_as/A_s) / (Gamma+/Gamma-),
//   n = (rho (1 + 2 n_aux) + 2 n_aux) / (1 - rho).
// Exactly invariant under joint rescaling of both areas.
inline AsymmetryEstimate occupation_from_sideband_areas(double area_anti_stokes,
                                                        double area_stokes,
                                                        double gamma_ratio,
                                                        double n_aux) {
    if (area_stokes <= 0)
        throw config_error("asymmetry: Stokes area must be positive");
    if (gamma_ratio <= 0)
        throw config_error("asymmetry: Gamma_+/Gamma_- must be positive");
    if (n_aux < 0)
        throw config_error("asymmetry: n_aux must be nonnegative");
    AsymmetryEstimate out;
    out.corrected_ratio = (area_anti_stokes / area_stokes) / gamma_ratio;
    if (out.corrected_ratio >= 1.0)
        throw fit_error("asymmetry: area ratio at or above unity has no "
                        "finite occupation");
    out.n_m = (out.corrected_ratio * (1.0 + 2.0 * n_aux) + 2.0 * n_aux) /
              (1.0 - out.corrected_ratio);
    out.ground_state_limited = area_anti_stokes <= 0;
    return out;
}

// Backaction of the resonant readout pump on the probed oscillator:
//   (Gamma_- (n_aux + 1) + Gamma_+ n_aux) / (Gamma_m + Gamma_opt + Gamma_+ - Gamma_-)
inline double aux_backaction_occupation(double gamma_plus, double gamma_minus,
                                        double gamma_m, double gamma_opt,
                                        double n_aux) {
    const double denom = gamma_m + gamma_opt + gamma_plus - gamma_minus;
    if (denom <= 0)
        throw config_error("aux backaction: net damping must be positive");
    return (gamma_minus * (n_aux + 1.0) + gamma_plus * n_aux) / denom;
}

// Trapezoidal area of a spectrum above a flat background.
inline double spectrum_area(const RealSpectrum& s, double background = 0.0) {
    if (s.freq.size() != s.value.size() || s.freq.size() < 2)
        throw config_error("spectrum_area: need at least two samples");
    require_increasing(s.freq, "spectrum_area");
    double area = 0.0;
    for (std::size_t j = 1; j < s.freq.size(); ++j)
        area += 0.5 * (s.value[j] - background + s.value[j - 1] - background) *
                (s.freq[j] - s.freq[j - 1]);
    return area;
}

// ---------------------------------------------------------------------------
// Strong-coupling sideband asymmetry (bright collective mode).

// Hybridized sideband lineshape:
//   S(delta) = BG + (A delta^2 + B) / |4 g^2 - 4 delta (delta + dt) + 2 i delta kappa|^2
inline double strong_sideband_model(double delta, double g, double kappa,
                                    double delta_tilde, double a, double b,
                                    double bg) {
    const cplx den(4.0 * g * g - 4.0 * delta * (delta + delta_tilde),
                   2.0 * delta * kappa);
    return bg + (a * delta * delta + b) / std::norm(den);
}

struct StrongSidebandGuess {
    double g = 0.0, kappa = 0.0, delta_tilde = 0.0;  // shared doublet shape
    double a_as = 0.0, b_as = 0.0, bg_as = 0.0;      // anti-Stokes weights
    double a_s = 0.0, b_s = 0.0, bg_s = 0.0;         // Stokes weights
};

struct StrongAsymmetryResult {
    double g = 0.0, kappa = 0.0, delta_tilde = 0.0;
    double a_as = 0.0, b_as = 0.0, bg_as = 0.0;
    double a_s = 0.0, b_s = 0.0, bg_s = 0.0;
    double area_anti_stokes = 0.0;  // background-free model area
    double area_stokes = 0.0;
    AsymmetryEstimate occupation;
    FitReport report;
};

namespace detail {

// area of the background-free doublet term, with analytic 1/delta tails
inline double strong_sideband_area(double g, double kappa, double delta_tilde,
                                   double a, double b) {
    const double scale =
        std::max({std::abs(g), std::abs(kappa), std::abs(delta_tilde)});
    const double reach = 1000.0 * scale;
    const double disc = std::sqrt(delta_tilde * delta_tilde + 4.0 * g * g);
    std::vector<double> breaks = {0.5 * (-delta_tilde - disc),
                                  0.5 * (-delta_tilde + disc), 0.0};
    auto f = [&](double x) {
        return strong_sideband_model(x, g, kappa, delta_tilde, a, b, 0.0);
    };
    const double peak = std::max(f(breaks[0]), f(breaks[1]));
    double area = integrate_with_breakpoints(f, -reach, reach, breaks,
                                             1e-10 * peak * scale);
    // |den|^2 -> 16 delta^4 in the wings
    area += std::abs(a) > 0 ? a / (8.0 * reach) : 0.0;
    area += b / (24.0 * reach * reach * reach);
    return area;
}

}  // namespace detail

// Joint fit of the two hybridized sidebands with shared {g, kappa, dt} and
// per-sideband weights; areas taken from the fitted model and the occupation
// from their corrected ratio.
inline StrongAsymmetryResult fit_sideband_asymmetry_strong(
    const RealSpectrum& anti_stokes, const RealSpectrum& stokes,
    double gamma_ratio, double n_aux, const StrongSidebandGuess& guess) {
    detail::check_trace(anti_stokes.freq, anti_stokes.value.size(),
                        "strong asymmetry");
    detail::check_trace(stokes.freq, stokes.value.size(), "strong asymmetry");
    if (guess.g <= 0 || guess.kappa <= 0)
        throw config_error("strong asymmetry: need positive g and kappa guesses");

    const std::size_t ma = anti_stokes.freq.size();
    const std::size_t ms = stokes.freq.size();
    auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(ma + ms);
        for (std::size_t j = 0; j < ma; ++j)
            r[j] = strong_sideband_model(anti_stokes.freq[j], p[0], p[1], p[2],
                                         p[3], p[4], p[5]) -
                   anti_stokes.value[j];
        for (std::size_t j = 0; j < ms; ++j)
            r[ma + j] = strong_sideband_model(stokes.freq[j], p[0], p[1], p[2],
                                              p[6], p[7], p[8]) -
                        stokes.value[j];
        return r;
    };

    double level = 0.0;
    for (double v : stokes.value) level = std::max(level, std::abs(v));
    const double w4 = std::pow(guess.kappa, 4);  // weight scale of the model
    Eigen::VectorXd x0(9), scales(9);
    x0 << guess.g, guess.kappa, guess.delta_tilde, guess.a_as, guess.b_as,
        guess.bg_as, guess.a_s, guess.b_s, guess.bg_s;
    scales << guess.g, guess.kappa, std::max(std::abs(guess.delta_tilde), guess.kappa),
        std::max(std::abs(guess.a_as), level * w4 / (guess.kappa * guess.kappa)),
        std::max(std::abs(guess.b_as), level * w4),
        std::max(std::abs(guess.bg_as), 1e-3 * level),
        std::max(std::abs(guess.a_s), level * w4 / (guess.kappa * guess.kappa)),
        std::max(std::abs(guess.b_s), level * w4),
        std::max(std::abs(guess.bg_s), 1e-3 * level);
    auto r = detail::scaled_levenberg_marquardt(residuals, x0, scales);
    if (!r.converged) throw fit_error("strong asymmetry: no convergence");

    StrongAsymmetryResult out;
    out.g = std::abs(r.params[0]);
    out.kappa = std::abs(r.params[1]);
    out.delta_tilde = r.params[2];
    out.a_as = r.params[3];
    out.b_as = r.params[4];
    out.bg_as = r.params[5];
    out.a_s = r.params[6];
    out.b_s = r.params[7];
    out.bg_s = r.params[8];
    out.report = detail::make_report(
        r, {"g", "kappa", "delta_tilde", "a_as", "b_as", "bg_as", "a_s", "b_s",
            "bg_s"});

    if (2.0 * out.g < out.kappa / 2.0)
        throw fit_error("strong asymmetry: doublet unresolved "
                        "(splitting below kappa/2)");

    out.area_anti_stokes = detail::strong_sideband_area(
        out.g, out.kappa, out.delta_tilde, out.a_as, out.b_as);
    out.area_stokes = detail::strong_sideband_area(
        out.g, out.kappa, out.delta_tilde, out.a_s, out.b_s);
    out.occupation = occupation_from_sideband_areas(
        out.area_anti_stokes, out.area_stokes, gamma_ratio, n_aux);
    return out;
}

}  // namespace hexamer

#endif
