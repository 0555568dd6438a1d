#ifndef HEXAMER_DYNAMICS_HPP
#define HEXAMER_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hexamer/common.hpp"

namespace hexamer {

// Mechanical oscillators coupled to one driven cavity mode. Sizes are dynamic
// (N oscillators) but the shipped device has N = 6.
struct MechanicalParams {
    std::vector<double> omega_m;   // rad/s, per oscillator
    std::vector<double> gamma_m;   // rad/s, intrinsic damping
    std::vector<double> g0;        // rad/s, vacuum optomechanical coupling

    std::size_t size() const { return omega_m.size(); }

    void validate() const {
        if (omega_m.empty()) throw config_error("mechanics: need at least one oscillator");
        if (gamma_m.size() != omega_m.size() || g0.size() != omega_m.size())
            throw config_error("mechanics: omega_m, gamma_m, g0 must have equal length");
        for (std::size_t i = 0; i < omega_m.size(); ++i) {
            if (omega_m[i] <= 0) throw config_error("mechanics: omega_m must be positive");
            if (gamma_m[i] <= 0) throw config_error("mechanics: gamma_m must be positive");
            if (g0[i] < 0) throw config_error("mechanics: g0 must be nonnegative");
        }
    }
};

struct CavityParams {
    double kappa_ex = 0.0;  // rad/s, external (feedline) rate
    double kappa_0 = 0.0;   // rad/s, internal rate
    double omega_c = 0.0;   // rad/s, resonance

    double kappa() const { return kappa_ex + kappa_0; }

    void validate() const {
        if (kappa_ex <= 0 || kappa_0 < 0)
            throw config_error("cavity: kappa_ex must be positive, kappa_0 nonnegative");
        if (omega_c <= 0) throw config_error("cavity: omega_c must be positive");
    }
};

// Pump working point. Couplings are the dressed g_i = g0_i sqrt(n_p).
struct PumpContext {
    double detuning = 0.0;          // rad/s, Delta = omega_p - omega_c
    double photon_number = 0.0;     // intracavity pump photons n_p
    std::vector<double> g;          // rad/s, dressed couplings

    static PumpContext from_photon_number(const MechanicalParams& mech,
                                          double detuning, double n_p) {
        mech.validate();
        if (n_p < 0) throw config_error("pump: photon number must be nonnegative");
        PumpContext ctx;
        ctx.detuning = detuning;
        ctx.photon_number = n_p;
        ctx.g.resize(mech.size());
        for (std::size_t i = 0; i < mech.size(); ++i)
            ctx.g[i] = mech.g0[i] * std::sqrt(n_p);
        return ctx;
    }

    // Multi-photon cooperativity summed over oscillators.
    double cooperativity(const MechanicalParams& mech, const CavityParams& cav) const {
        double c = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            c += 4.0 * g[i] * g[i] / (cav.kappa() * mech.gamma_m[i]);
        return c;
    }
};

// (N+1) x (N+1) dynamical matrix in the rotated frame, cavity first:
//   M = [ -i*Delta - kappa/2   -i g_1 ... -i g_N
//         -i g_1               -i Omega_1 - Gamma_1/2
//         ...                                ...      ]
// Frequencies enter as detunings from the pump for the cavity and as absolute
// mechanical frequencies for the oscillators, matching the beam-splitter
// rotating-wave model.
inline Eigen::MatrixXcd dynamical_matrix(const MechanicalParams& mech,
                                         const CavityParams& cav,
                                         const PumpContext& pump) {
    mech.validate();
    cav.validate();
    const std::size_t n = mech.size();
    if (pump.g.size() != n)
        throw config_error("pump: coupling vector length must match the mechanics");
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    M(0, 0) = cplx(-cav.kappa() / 2.0, -pump.detuning);
    for (std::size_t i = 0; i < n; ++i) {
        M(i + 1, i + 1) = cplx(-mech.gamma_m[i] / 2.0, -mech.omega_m[i]);
        M(0, i + 1) = cplx(0.0, -pump.g[i]);
        M(i + 1, 0) = cplx(0.0, -pump.g[i]);
    }
    return M;
}

// One eigenmode of the dynamical matrix.
struct CollectiveMode {
    cplx eigenvalue;                 // lambda_j
    double frequency = 0.0;          // -Im lambda
    double linewidth = 0.0;          // -2 Re lambda (full width)
    Eigen::VectorXcd full_vector;    // cavity + mechanics, unit norm
    Eigen::VectorXcd mech_vector;    // mechanical part, renormalized to unit norm
    double cavity_weight = 0.0;      // |cavity amplitude|^2 of the full vector
};

struct CollectiveModeSet {
    std::vector<CollectiveMode> modes;   // sorted: linewidth desc, frequency asc
    Eigen::MatrixXcd right;              // right eigenvectors as columns
    Eigen::MatrixXcd left_inv;           // inverse of the right-vector matrix
    Eigen::VectorXcd eigenvalues;        // same order as `modes`
};

// Full non-Hermitian diagonalization of the dynamical matrix. Throws if the
// eigenbasis is (nearly) defective.
inline CollectiveModeSet collective_eigenmodes(const Eigen::MatrixXcd& M) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
    if (es.info() != Eigen::Success)
        throw numerical_error("collective_eigenmodes: eigensolver failed");
    Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::VectorXcd lam = es.eigenvalues();

    // condition of the eigenvector matrix guards against defectiveness
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const double cond = svd.singularValues()(0) /
                        svd.singularValues()(svd.singularValues().size() - 1);
    if (!std::isfinite(cond) || cond > 1e8)
        throw numerical_error("collective_eigenmodes: eigenbasis is near defective");

    const int n = int(M.rows());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double la = -2.0 * lam(a).real(), lb = -2.0 * lam(b).real();
        if (std::abs(la - lb) > 1e-9 * (la + lb + 1e-300)) return la > lb;
        return -lam(a).imag() < -lam(b).imag();
    });

    CollectiveModeSet out;
    out.right.resize(n, n);
    out.eigenvalues.resize(n);
    for (int c = 0; c < n; ++c) {
        const int idx = order[c];
        Eigen::VectorXcd v = V.col(idx).normalized();
        // phase convention: largest-magnitude entry real positive
        int imax = 0;
        for (int r = 1; r < n; ++r)
            if (std::abs(v(r)) > std::abs(v(imax))) imax = r;
        if (std::abs(v(imax)) > 0) v *= std::conj(v(imax)) / std::abs(v(imax));
        out.right.col(c) = v;
        out.eigenvalues(c) = lam(idx);

        CollectiveMode m;
        m.eigenvalue = lam(idx);
        m.frequency = -lam(idx).imag();
        m.linewidth = -2.0 * lam(idx).real();
        m.full_vector = v;
        m.cavity_weight = std::norm(v(0));
        if (n > 1) {
            m.mech_vector = v.segment(1, n - 1);
            const double nm = m.mech_vector.norm();
            if (nm > 0) m.mech_vector /= nm;
        }
        out.modes.push_back(std::move(m));
    }
    out.left_inv = out.right.inverse();
    return out;
}

// Cavity and mechanical susceptibilities of the linearized model.
inline cplx chi_cavity(double omega, const CavityParams& cav, double detuning) {
    return 1.0 / (cplx(cav.kappa() / 2.0, -(omega - detuning)));
}

inline cplx chi_mech(double omega, double omega_m, double gamma_m) {
    return 1.0 / (cplx(gamma_m / 2.0, -(omega - omega_m)));
}

// Collective denominator D(omega) = sum_i chi_m,i g_i^2 + 1/chi_c.
inline cplx collective_denominator(double omega, const MechanicalParams& mech,
                                   const CavityParams& cav, const PumpContext& pump) {
    cplx d = 1.0 / chi_cavity(omega, cav, pump.detuning);
    for (std::size_t i = 0; i < mech.size(); ++i)
        d += pump.g[i] * pump.g[i] * chi_mech(omega, mech.omega_m[i], mech.gamma_m[i]);
    return d;
}

// Probe reflection in the driven frame (omega measured from the pump).
inline cplx omit_reflection(double omega, const MechanicalParams& mech,
                            const CavityParams& cav, const PumpContext& pump) {
    return 1.0 - cav.kappa_ex / collective_denominator(omega, mech, cav, pump);
}

inline ComplexSpectrum omit_reflection(const std::vector<double>& omega,
                                       const MechanicalParams& mech,
                                       const CavityParams& cav,
                                       const PumpContext& pump) {
    mech.validate();
    cav.validate();
    require_increasing(omega, "omit_reflection");
    ComplexSpectrum s;
    s.freq = omega;
    s.value.reserve(omega.size());
    for (double w : omega) s.value.push_back(omit_reflection(w, mech, cav, pump));
    return s;
}

// Same reflection assembled from the eigendecomposition of the dynamical
// matrix: S11 = 1 - kappa_ex sum_j s_{1j} sbar_{j1} / (-i omega - lambda_j).
inline cplx omit_reflection_collective(double omega, const CollectiveModeSet& modes,
                                       double kappa_ex) {
    cplx sum = 0.0;
    const int n = int(modes.eigenvalues.size());
    for (int j = 0; j < n; ++j)
        sum += modes.right(0, j) * modes.left_inv(j, 0) /
               (cplx(0.0, -omega) - modes.eigenvalues(j));
    return 1.0 - kappa_ex * sum;
}

inline ComplexSpectrum omit_reflection_collective(const std::vector<double>& omega,
                                                  const CollectiveModeSet& modes,
                                                  double kappa_ex) {
    require_increasing(omega, "omit_reflection_collective");
    ComplexSpectrum s;
    s.freq = omega;
    s.value.reserve(omega.size());
    for (double w : omega)
        s.value.push_back(omit_reflection_collective(w, modes, kappa_ex));
    return s;
}

// ---------------------------------------------------------------------------
// Collective coupling diagnostics.

struct CollectiveMetrics {
    double g_col = 0.0;               // |<psi|g>|, rad/s
    double enhancement_xi = 0.0;      // g_col^2 / mean(g_i^2), in [0, N]
    int bright_index = -1;            // index into the mode set
};

// Index of the mechanical eigenmode with the largest overlap with the coupling
// vector; the cavity-dominated mode (largest cavity weight) is excluded.
inline int bright_mode_index(const CollectiveModeSet& modes, const PumpContext& pump) {
    int cavity_like = 0;
    for (std::size_t j = 1; j < modes.modes.size(); ++j)
        if (modes.modes[j].cavity_weight > modes.modes[cavity_like].cavity_weight)
            cavity_like = int(j);
    Eigen::VectorXcd g(pump.g.size());
    for (std::size_t i = 0; i < pump.g.size(); ++i) g(i) = pump.g[i];
    int best = -1;
    double best_ov = -1.0;
    for (std::size_t j = 0; j < modes.modes.size(); ++j) {
        if (int(j) == cavity_like) continue;
        const double ov = std::abs((modes.modes[j].mech_vector.adjoint() * g)(0));
        if (ov > best_ov) {
            best_ov = ov;
            best = int(j);
        }
    }
    return best;
}

inline CollectiveMetrics collective_coupling_metrics(const CollectiveModeSet& modes,
                                                     const PumpContext& pump) {
    CollectiveMetrics out;
    out.bright_index = bright_mode_index(modes, pump);
    if (out.bright_index < 0) return out;
    Eigen::VectorXcd g(pump.g.size());
    double mean_g2 = 0.0;
    for (std::size_t i = 0; i < pump.g.size(); ++i) {
        g(i) = pump.g[i];
        mean_g2 += pump.g[i] * pump.g[i];
    }
    mean_g2 /= double(pump.g.size());
    const Eigen::VectorXcd& psi = modes.modes[out.bright_index].mech_vector;
    out.g_col = std::abs((psi.adjoint() * g)(0));
    out.enhancement_xi = mean_g2 > 0 ? out.g_col * out.g_col / mean_g2 : 0.0;
    return out;
}

// Pump-photon thresholds separating the individual, intermediate-collective
// and strong-coupling regimes.
struct RegimeThresholds {
    double n_individual_to_collective = 0.0;  // kappa sigma_m / (4 g0bar^2 N)
    double n_collective_to_strong = 0.0;      // kappa^2 / (4 g0bar^2 N)
};

inline RegimeThresholds regime_thresholds(double kappa, double g0_mean,
                                          double sigma_omega_m, std::size_t n_osc) {
    if (kappa <= 0 || g0_mean <= 0 || sigma_omega_m < 0 || n_osc == 0)
        throw config_error("regime_thresholds: kappa, g0 must be positive");
    RegimeThresholds t;
    t.n_individual_to_collective =
        kappa * sigma_omega_m / (4.0 * g0_mean * g0_mean * double(n_osc));
    t.n_collective_to_strong =
        kappa * kappa / (4.0 * g0_mean * g0_mean * double(n_osc));
    return t;
}

}  // namespace hexamer

#endif
