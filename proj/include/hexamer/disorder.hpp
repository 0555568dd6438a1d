#ifndef HEXAMER_DISORDER_HPP
#define HEXAMER_DISORDER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hexamer/circuit.hpp"
#include "hexamer/common.hpp"
#include "hexamer/dynamics.hpp"

namespace hexamer {

// Monte Carlo specification of fabrication frequency disorder.
struct DisorderSpec {
    double sigma = 0.0;               // relative frequency std
    int samples = 1;
    unsigned long long seed = 1;
    int workers = 1;

    void validate() const {
        if (sigma < 0) throw config_error("disorder: sigma must be nonnegative");
        if (samples < 1) throw config_error("disorder: need at least one sample");
        if (workers < 1) throw config_error("disorder: need at least one worker");
    }
};

// Deterministic per-draw sub-seed (splitmix64 of seed + index), so results do
// not depend on how the draws are distributed over workers.
inline unsigned long long disorder_subseed(unsigned long long seed,
                                           unsigned long long draw) {
    unsigned long long z = seed + 0x9e3779b97f4a7c15ULL * (draw + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace detail {

// Parallel map over draws; each worker handles a contiguous chunk, results go
// into preassigned slots so the reduction is order-independent.
template <class Fn>
inline void parallel_draws(int samples, int workers, Fn&& per_draw) {
    workers = std::min(workers, samples);
    if (workers <= 1) {
        for (int d = 0; d < samples; ++d) per_draw(d);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (samples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk, hi = std::min(samples, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&per_draw, lo, hi] {
            for (int d = lo; d < hi; ++d) per_draw(d);
        });
    }
    for (auto& t : pool) t.join();
}

inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw config_error("percentile: empty sample");
    std::sort(v.begin(), v.end());
    const double x = p * double(v.size() - 1);
    const std::size_t i = std::size_t(x);
    if (i + 1 >= v.size()) return v.back();
    const double f = x - double(i);
    return v[i] + f * (v[i + 1] - v[i]);  // exact when neighbours coincide
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

}  // namespace detail

struct Histogram {
    std::vector<double> edges;        // nbins + 1 ascending
    std::vector<std::size_t> counts;  // nbins

    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

inline Histogram make_histogram(const std::vector<double>& values, double lo,
                                double hi, std::size_t nbins) {
    if (!(hi > lo) || nbins < 1)
        throw config_error("histogram: need hi > lo and at least one bin");
    Histogram h;
    h.edges.resize(nbins + 1);
    for (std::size_t b = 0; b <= nbins; ++b)
        h.edges[b] = lo + (hi - lo) * double(b) / double(nbins);
    h.counts.assign(nbins, 0);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        std::size_t b = std::size_t((v - lo) / (hi - lo) * double(nbins));
        if (b >= nbins) b = nbins - 1;  // right edge inclusive
        ++h.counts[b];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Microwave frequency disorder.

// Ensemble statistics at one disorder strength. Frequencies are reported in
// the symmetry order of MicrowaveModeSet (auxiliary, pair +-1 upper/lower,
// pair +-2 upper/lower, primary).
struct MwDisorderPoint {
    double sigma = 0.0;
    std::array<double, 6> mean_frequency{};
    double mean_splitting_pair1 = 0.0;  // 2r
    double mean_splitting_pair2 = 0.0;  // 2r'
    double splitting_pair1_stderr = 0.0;
    double splitting_pair2_stderr = 0.0;
    double mean_pair1_center = 0.0;  // mean of the two split frequencies
    double mean_pair2_center = 0.0;
    double pair1_center_stderr = 0.0;
    double pair2_center_stderr = 0.0;
    double mean_fidelity_primary = 0.0;
    double mean_fidelity_auxiliary = 0.0;
    double min_fidelity_primary = 0.0;
    double min_fidelity_auxiliary = 0.0;
    Histogram primary_amplitudes;    // |site amplitude| over draws and sites
    Histogram auxiliary_amplitudes;
};

struct MwDisorderStatistics {
    std::vector<MwDisorderPoint> points;
    std::array<double, 6> unperturbed_frequency{};
    bool perturbative_warning = false;  // some sigma above 1%
};

namespace detail {

// Site-basis hopping Hamiltonian whose spectrum reproduces the closed-form
// ring frequencies: omega0 on the diagonal, J1/J2/J3 by neighbor distance.
inline Eigen::Matrix<double, 6, 6> ring_hamiltonian(const MicrowaveModeSet& modes) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    const std::array<double, 3> j = {modes.j1_exact, modes.j2_exact,
                                     modes.j3_exact};
    for (int m = 0; m < 6; ++m) {
        h(m, m) = modes.omega0_exact;
        for (int n = 0; n < 6; ++n) {
            if (m == n) continue;
            const int d = std::min(std::abs(m - n), 6 - std::abs(m - n));
            h(m, n) = j[d - 1];
        }
    }
    return h;
}

struct MwDraw {
    std::array<double, 6> frequency{};  // symmetry order, pairs upper/lower
    double fidelity_primary = 0.0;
    double fidelity_auxiliary = 0.0;
    std::array<double, 6> primary_amp{};
    std::array<double, 6> auxiliary_amp{};
};

inline MwDraw mw_single_draw(const Eigen::Matrix<double, 6, 6>& h0,
                             const Eigen::Matrix<cplx, 6, 6>& ideal,
                             double sigma_abs, unsigned long long subseed) {
    std::mt19937_64 rng(subseed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Matrix<double, 6, 6> h = h0;
    for (int m = 0; m < 6; ++m) h(m, m) += sigma_abs * gauss(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(h);
    if (es.info() != Eigen::Success)
        throw numerical_error("mw disorder: eigensolver failed");

    // subspace weights of each disordered eigenvector
    Eigen::Matrix<double, 6, 4> w;  // aux, pair1, pair2, primary
    for (int v = 0; v < 6; ++v) {
        const Eigen::Matrix<double, 6, 1> vec = es.eigenvectors().col(v);
        auto ov = [&](int c) {
            return std::norm((ideal.col(c).adjoint() * vec.cast<cplx>())(0));
        };
        w(v, 0) = ov(0);
        w(v, 1) = ov(1) + ov(2);
        w(v, 2) = ov(3) + ov(4);
        w(v, 3) = ov(5);
    }

    // greedy assignment: the non-degenerate modes first, then split the rest
    int aux = 0, pri = 0;
    for (int v = 1; v < 6; ++v) {
        if (w(v, 0) > w(aux, 0)) aux = v;
        if (w(v, 3) > w(pri, 3)) pri = v;
    }
    if (aux == pri)
        throw numerical_error("mw disorder: mode assignment collapsed");
    std::vector<int> rest;
    for (int v = 0; v < 6; ++v)
        if (v != aux && v != pri) rest.push_back(v);
    std::sort(rest.begin(), rest.end(),
              [&](int x, int y) { return w(x, 1) > w(y, 1); });
    std::array<int, 2> pair1 = {rest[0], rest[1]};
    std::array<int, 2> pair2 = {rest[2], rest[3]};
    auto upper_first = [&](std::array<int, 2>& p) {
        if (es.eigenvalues()(p[0]) < es.eigenvalues()(p[1]))
            std::swap(p[0], p[1]);
    };
    upper_first(pair1);
    upper_first(pair2);

    MwDraw out;
    out.frequency = {es.eigenvalues()(aux),      es.eigenvalues()(pair1[0]),
                     es.eigenvalues()(pair1[1]), es.eigenvalues()(pair2[0]),
                     es.eigenvalues()(pair2[1]), es.eigenvalues()(pri)};
    out.fidelity_auxiliary = std::min(1.0, w(aux, 0));  // overlap can top 1 by round-off
    out.fidelity_primary = std::min(1.0, w(pri, 3));
    for (int m = 0; m < 6; ++m) {
        out.primary_amp[m] = std::abs(es.eigenvectors()(m, pri));
        out.auxiliary_amp[m] = std::abs(es.eigenvectors()(m, aux));
    }
    return out;
}

}  // namespace detail

// Diagonalize the disordered ring Hamiltonian over a Gaussian ensemble of
// site-frequency offsets (std sigma * omega0) for each requested disorder
// strength.
inline MwDisorderStatistics mw_disorder_statistics(const CircuitParams& circuit,
                                                   const std::vector<double>& sigmas,
                                                   const DisorderSpec& spec) {
    spec.validate();
    if (sigmas.empty())
        throw config_error("mw_disorder_statistics: need at least one sigma");
    for (double s : sigmas)
        if (s < 0) throw config_error("mw_disorder_statistics: sigma must be nonnegative");

    const MicrowaveModeSet modes = circuit_eigenmodes(circuit);
    const Eigen::Matrix<double, 6, 6> h0 = detail::ring_hamiltonian(modes);
    MwDisorderStatistics out;
    out.unperturbed_frequency = modes.frequencies;

    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        const double sigma = sigmas[si];
        if (sigma > 0.01) out.perturbative_warning = true;
        const double sigma_abs = sigma * modes.omega0_exact;

        std::vector<detail::MwDraw> draws(std::size_t(spec.samples));
        detail::parallel_draws(spec.samples, spec.workers, [&](int d) {
            draws[std::size_t(d)] = detail::mw_single_draw(
                h0, modes.modeshapes, sigma_abs,
                disorder_subseed(spec.seed, (unsigned long long)(si) << 32 |
                                                (unsigned long long)(d)));
        });

        MwDisorderPoint pt;
        pt.sigma = sigma;
        const double cnt = double(spec.samples);
        std::vector<double> split1, split2, cent1, cent2;
        std::vector<double> pri_amp, aux_amp;
        pt.min_fidelity_primary = 1.0;
        pt.min_fidelity_auxiliary = 1.0;
        for (const auto& d : draws) {
            for (int k = 0; k < 6; ++k) pt.mean_frequency[k] += d.frequency[k] / cnt;
            split1.push_back(d.frequency[1] - d.frequency[2]);
            split2.push_back(d.frequency[3] - d.frequency[4]);
            cent1.push_back(0.5 * (d.frequency[1] + d.frequency[2]));
            cent2.push_back(0.5 * (d.frequency[3] + d.frequency[4]));
            pt.mean_fidelity_primary += d.fidelity_primary / cnt;
            pt.mean_fidelity_auxiliary += d.fidelity_auxiliary / cnt;
            pt.min_fidelity_primary = std::min(pt.min_fidelity_primary, d.fidelity_primary);
            pt.min_fidelity_auxiliary = std::min(pt.min_fidelity_auxiliary, d.fidelity_auxiliary);
            for (int m = 0; m < 6; ++m) {
                pri_amp.push_back(d.primary_amp[m]);
                aux_amp.push_back(d.auxiliary_amp[m]);
            }
        }
        auto stderr_of = [&](const std::vector<double>& v, double mean) {
            if (v.size() < 2) return 0.0;
            double s2 = 0.0;
            for (double x : v) s2 += (x - mean) * (x - mean);
            return std::sqrt(s2 / double(v.size() - 1) / double(v.size()));
        };
        pt.mean_splitting_pair1 = detail::mean_of(split1);
        pt.mean_splitting_pair2 = detail::mean_of(split2);
        pt.splitting_pair1_stderr = stderr_of(split1, pt.mean_splitting_pair1);
        pt.splitting_pair2_stderr = stderr_of(split2, pt.mean_splitting_pair2);
        pt.mean_pair1_center = detail::mean_of(cent1);
        pt.mean_pair2_center = detail::mean_of(cent2);
        pt.pair1_center_stderr = stderr_of(cent1, pt.mean_pair1_center);
        pt.pair2_center_stderr = stderr_of(cent2, pt.mean_pair2_center);
        pt.primary_amplitudes = make_histogram(pri_amp, 0.0, 1.0, 50);
        pt.auxiliary_amplitudes = make_histogram(aux_amp, 0.0, 1.0, 50);
        out.points.push_back(std::move(pt));
    }
    return out;
}

// Infer the fabrication disorder strength from two measured pair splittings by
// inverting the (linear, zero-intercept) mean-splitting-vs-sigma trend,
// calibrated by Monte Carlo at a reference sigma.
struct MwSigmaEstimate {
    double sigma = 0.0;
    double slope_pair1 = 0.0;  // mean splitting per unit sigma, rad/s
    double slope_pair2 = 0.0;
};

inline MwSigmaEstimate infer_mw_sigma(const CircuitParams& circuit,
                                      double measured_splitting_pair1,
                                      double measured_splitting_pair2,
                                      const DisorderSpec& spec,
                                      double sigma_ref = 1e-3) {
    if (measured_splitting_pair1 <= 0 || measured_splitting_pair2 <= 0)
        throw config_error("infer_mw_sigma: splittings must be positive");
    if (sigma_ref <= 0)
        throw config_error("infer_mw_sigma: reference sigma must be positive");
    auto stats = mw_disorder_statistics(circuit, {sigma_ref}, spec);
    MwSigmaEstimate out;
    out.slope_pair1 = stats.points[0].mean_splitting_pair1 / sigma_ref;
    out.slope_pair2 = stats.points[0].mean_splitting_pair2 / sigma_ref;
    if (out.slope_pair1 <= 0 || out.slope_pair2 <= 0)
        throw numerical_error("infer_mw_sigma: degenerate splitting slope");
    out.sigma = 0.5 * (measured_splitting_pair1 / out.slope_pair1 +
                       measured_splitting_pair2 / out.slope_pair2);
    return out;
}

// ---------------------------------------------------------------------------
// Mechanical frequency disorder.

// Per-cooperativity ensemble bands of the tracked collective trajectories.
// Slot 0 is the trajectory with the largest linewidth at the top of the
// cooperativity grid (the emerging bright mode); the remaining slots follow.
struct MechDisorderSweep {
    std::vector<double> cooperativity;  // the input grid (mean multi-photon C)
    std::vector<double> photon_number;  // pump photons realizing each C
    std::vector<double> reference;      // N * mean optomechanical damping, rad/s
    // [grid point][slot]
    std::vector<std::vector<double>> linewidth_mean, linewidth_p5, linewidth_p95;
    std::vector<std::vector<double>> frequency_mean, frequency_p5, frequency_p95;
};

namespace detail {

struct MechTrajectory {
    // [grid point][slot]
    std::vector<std::vector<double>> linewidth, frequency;
};

inline MechTrajectory mech_single_draw(const MechanicalParams& base,
                                       const CavityParams& cav,
                                       double omega_bar, double sigma,
                                       const std::vector<double>& photons,
                                       unsigned long long subseed) {
    const std::size_t n = base.size();
    std::mt19937_64 rng(subseed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MechanicalParams mech = base;
    for (std::size_t i = 0; i < n; ++i)
        mech.omega_m[i] = omega_bar * (1.0 + sigma * gauss(rng));
    mech.validate();

    MechTrajectory tr;
    std::vector<Eigen::VectorXcd> prev;  // mech vectors of the tracked slots
    std::vector<int> order(n);
    for (double np : photons) {
        auto pump = PumpContext::from_photon_number(mech, omega_bar, np);
        auto modes = collective_eigenmodes(dynamical_matrix(mech, cav, pump));
        int cavity_like = 0;
        for (std::size_t j = 1; j < modes.modes.size(); ++j)
            if (modes.modes[j].cavity_weight > modes.modes[cavity_like].cavity_weight)
                cavity_like = int(j);
        std::vector<int> mech_modes;
        for (std::size_t j = 0; j < modes.modes.size(); ++j)
            if (int(j) != cavity_like) mech_modes.push_back(int(j));

        std::vector<int> slot_of(n, -1);
        if (prev.empty()) {
            // first grid point: order by frequency
            std::sort(mech_modes.begin(), mech_modes.end(), [&](int a, int b) {
                return modes.modes[a].frequency < modes.modes[b].frequency;
            });
            for (std::size_t s = 0; s < n; ++s) slot_of[s] = mech_modes[s];
        } else {
            // continuity: greedily match to the previous vectors by overlap
            std::vector<bool> used(mech_modes.size(), false);
            for (std::size_t s = 0; s < n; ++s) {
                double best = -1.0;
                std::size_t pick = 0;
                for (std::size_t j = 0; j < mech_modes.size(); ++j) {
                    if (used[j]) continue;
                    const double ov = std::abs(
                        (prev[s].adjoint() *
                         modes.modes[mech_modes[j]].mech_vector)(0));
                    if (ov > best) {
                        best = ov;
                        pick = j;
                    }
                }
                used[pick] = true;
                slot_of[s] = mech_modes[pick];
            }
        }

        prev.assign(n, Eigen::VectorXcd());
        std::vector<double> lw(n), fr(n);
        for (std::size_t s = 0; s < n; ++s) {
            const auto& m = modes.modes[slot_of[s]];
            lw[s] = m.linewidth;
            fr[s] = m.frequency;
            prev[s] = m.mech_vector;
        }
        tr.linewidth.push_back(std::move(lw));
        tr.frequency.push_back(std::move(fr));
    }

    // relabel slots so slot 0 is broadest at the top of the grid
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return tr.linewidth.back()[a] > tr.linewidth.back()[b];
    });
    MechTrajectory sorted;
    for (std::size_t j = 0; j < tr.linewidth.size(); ++j) {
        std::vector<double> lw(n), fr(n);
        for (std::size_t s = 0; s < n; ++s) {
            lw[s] = tr.linewidth[j][order[s]];
            fr[s] = tr.frequency[j][order[s]];
        }
        sorted.linewidth.push_back(std::move(lw));
        sorted.frequency.push_back(std::move(fr));
    }
    return sorted;
}

}  // namespace detail

// Sweep the mean multi-photon cooperativity for an ensemble of frequency
// realizations Omega_i = Omega_bar (1 + sigma N(0,1)) of an idealized device
// (site-averaged Omega, Gamma, g0), reporting 5th/95th percentile bands per
// tracked trajectory and the N * mean(Gamma_opt) reference line.
inline MechDisorderSweep mech_disorder_sweep(const MechanicalParams& device_mech,
                                             const CavityParams& cav,
                                             const DisorderSpec& spec,
                                             const std::vector<double>& cooperativity) {
    device_mech.validate();
    cav.validate();
    spec.validate();
    if (cooperativity.empty())
        throw config_error("mech_disorder_sweep: need a cooperativity grid");
    require_increasing(cooperativity, "mech_disorder_sweep");
    if (cooperativity.front() <= 0)
        throw config_error("mech_disorder_sweep: cooperativities must be positive");

    const std::size_t n = device_mech.size();
    double omega_bar = 0.0, gamma_bar = 0.0, g0_bar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        omega_bar += device_mech.omega_m[i] / double(n);
        gamma_bar += device_mech.gamma_m[i] / double(n);
        g0_bar += device_mech.g0[i] / double(n);
    }
    MechanicalParams base;
    base.omega_m.assign(n, omega_bar);
    base.gamma_m.assign(n, gamma_bar);
    base.g0.assign(n, g0_bar);

    MechDisorderSweep out;
    out.cooperativity = cooperativity;
    for (double c : cooperativity) {
        // mean single-oscillator cooperativity C = 4 g0^2 n_p / (kappa Gamma)
        out.photon_number.push_back(c * cav.kappa() * gamma_bar /
                                    (4.0 * g0_bar * g0_bar));
        out.reference.push_back(double(n) * c * gamma_bar);
    }

    std::vector<detail::MechTrajectory> draws(std::size_t(spec.samples));
    detail::parallel_draws(spec.samples, spec.workers, [&](int d) {
        draws[std::size_t(d)] = detail::mech_single_draw(
            base, cav, omega_bar, spec.sigma, out.photon_number,
            disorder_subseed(spec.seed, (unsigned long long)(d)));
    });

    const std::size_t npts = cooperativity.size();
    for (std::size_t j = 0; j < npts; ++j) {
        std::vector<double> lm(n), l5(n), l95(n), fm(n), f5(n), f95(n);
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<double> lw, fr;
            for (const auto& d : draws) {
                lw.push_back(d.linewidth[j][s]);
                fr.push_back(d.frequency[j][s]);
            }
            lm[s] = detail::mean_of(lw);
            l5[s] = detail::percentile(lw, 0.05);
            l95[s] = detail::percentile(lw, 0.95);
            fm[s] = detail::mean_of(fr);
            f5[s] = detail::percentile(fr, 0.05);
            f95[s] = detail::percentile(fr, 0.95);
        }
        out.linewidth_mean.push_back(std::move(lm));
        out.linewidth_p5.push_back(std::move(l5));
        out.linewidth_p95.push_back(std::move(l95));
        out.frequency_mean.push_back(std::move(fm));
        out.frequency_p5.push_back(std::move(f5));
        out.frequency_p95.push_back(std::move(f95));
    }
    return out;
}

}  // namespace hexamer

#endif
