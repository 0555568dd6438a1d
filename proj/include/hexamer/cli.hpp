#ifndef HEXAMER_CLI_HPP
#define HEXAMER_CLI_HPP

// Batch front-end glue: grid parsing, per-subcommand pipelines and file
// emission. Kept in the library so the pipelines are testable without
// spawning the executable; the binary is a thin argument parser around these.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "hexamer/config.hpp"
#include "hexamer/disorder.hpp"
#include "hexamer/dynamics.hpp"
#include "hexamer/estimation.hpp"
#include "hexamer/io.hpp"
#include "hexamer/ringdown.hpp"
#include "hexamer/spectra.hpp"

namespace hexamer {

// "start:stop:n" (linear) or "start:stop:n:log".
inline std::vector<double> parse_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.size() != 3 && parts.size() != 4)
        throw config_error("grid: expected start:stop:n[:log], got '" + spec + "'");
    double a, b;
    std::size_t n;
    try {
        a = std::stod(parts[0]);
        b = std::stod(parts[1]);
        n = std::stoul(parts[2]);
    } catch (const std::exception&) {
        throw config_error("grid: malformed number in '" + spec + "'");
    }
    if (parts.size() == 4) {
        if (parts[3] != "log")
            throw config_error("grid: unknown spacing '" + parts[3] + "'");
        return logspace(a, b, n);
    }
    if (n == 1) {
        if (a != b) throw config_error("grid: single-point grid needs start == stop");
        return {a};
    }
    return linspace(a, b, n);
}

inline int exit_code_for_config_error() { return 2; }
inline int exit_code_for_numerical_error() { return 3; }
inline int exit_code_for_fit_error() { return 4; }

namespace detail {

inline std::string out_path(const std::string& out_dir, const std::string& name) {
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / name).string();
}

inline OutputMeta meta_for(const DeviceConfig& cfg, std::uint64_t seed) {
    OutputMeta m;
    m.config_hash = config_hash(cfg);
    m.seed = seed;
    return m;
}

inline double mean_of_vec(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x / double(v.size());
    return s;
}

// photon number at which the per-oscillator mean cooperativity equals c
inline double photons_for_cooperativity(const DeviceConfig& cfg, double c) {
    double coop_per_photon = 0.0;
    for (std::size_t i = 0; i < cfg.mech.size(); ++i)
        coop_per_photon += 4.0 * cfg.mech.g0[i] * cfg.mech.g0[i] /
                           (cfg.cavity.kappa() * cfg.mech.gamma_m[i] *
                            double(cfg.mech.size()));
    return c / coop_per_photon;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// circuit: microwave mode report.

struct CircuitReport {
    MicrowaveModeSet modes;
};

inline CircuitReport cmd_circuit(const DeviceConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    CircuitReport rep;
    rep.modes = circuit_eigenmodes(cfg.circuit);
    const auto meta = detail::meta_for(cfg, cfg.run.seed);
    write_json(detail::out_path(out_dir, "circuit_modes.json"),
               mw_modes_json(rep.modes), meta);
    auto csv = detail::open_csv(detail::out_path(out_dir, "circuit_modes.csv"), meta,
                                "mode_index,frequency_hz,rate_hz");
    for (int n = 0; n < 6; ++n)
        csv << n << "," << rad_to_hz(rep.modes.frequencies[std::size_t(n)]) << ","
            << rad_to_hz(rep.modes.feedline_rates[std::size_t(n)]) << "\n";
    return rep;
}

// ---------------------------------------------------------------------------
// omit: reflection trace at the first pump point plus eigenmode/enhancement
// sweeps over the photon-number grid.

struct OmitReport {
    ComplexSpectrum trace;               // at the first grid point
    std::vector<EigenSweepRow> sweep;    // mechanical eigenmodes only
    std::vector<double> cooperativity;   // per grid point
    std::vector<double> xi;              // collective enhancement per point
};

inline OmitReport cmd_omit(const DeviceConfig& cfg, const std::vector<double>& np_grid,
                           const std::string& out_dir) {
    cfg.validate();
    if (np_grid.empty()) throw config_error("omit: empty photon-number grid");
    for (double np : np_grid)
        if (np < 0) throw config_error("omit: photon numbers must be nonnegative");

    const double omega_bar = detail::mean_of_vec(cfg.mech.omega_m);
    const double kappa = cfg.cavity.kappa();
    OmitReport rep;

    auto probe = linspace(*std::min_element(cfg.mech.omega_m.begin(),
                                            cfg.mech.omega_m.end()) - 3.0 * kappa,
                          *std::max_element(cfg.mech.omega_m.begin(),
                                            cfg.mech.omega_m.end()) + 3.0 * kappa,
                          4001);
    const auto pump0 =
        PumpContext::from_photon_number(cfg.mech, omega_bar, np_grid.front());
    rep.trace = omit_reflection(probe, cfg.mech, cfg.cavity, pump0);

    for (double np : np_grid) {
        const auto pump = PumpContext::from_photon_number(cfg.mech, omega_bar, np);
        const double coop = pump.cooperativity(cfg.mech, cfg.cavity) /
                            double(cfg.mech.size());
        const auto modes =
            collective_eigenmodes(dynamical_matrix(cfg.mech, cfg.cavity, pump));
        int cavity_like = 0;
        for (std::size_t j = 1; j < modes.modes.size(); ++j)
            if (modes.modes[j].cavity_weight >
                modes.modes[cavity_like].cavity_weight)
                cavity_like = int(j);
        int idx = 0;
        for (std::size_t j = 0; j < modes.modes.size(); ++j) {
            if (int(j) == cavity_like) continue;
            rep.sweep.push_back({coop, idx++, modes.modes[j].linewidth,
                                 modes.modes[j].frequency - omega_bar});
        }
        const auto metrics = collective_coupling_metrics(modes, pump);
        rep.cooperativity.push_back(coop);
        rep.xi.push_back(metrics.enhancement_xi);
    }

    const auto meta = detail::meta_for(cfg, cfg.run.seed);
    write_complex_spectrum_csv(detail::out_path(out_dir, "omit_trace.csv"), rep.trace,
                               meta);
    write_eigen_sweep_csv(detail::out_path(out_dir, "omit_sweep.csv"), rep.sweep, meta);
    auto csv = detail::open_csv(detail::out_path(out_dir, "omit_enhancement.csv"),
                                meta, "cooperativity,photon_number,xi");
    for (std::size_t k = 0; k < np_grid.size(); ++k)
        csv << rep.cooperativity[k] << "," << np_grid[k] << "," << rep.xi[k] << "\n";
    return rep;
}

// ---------------------------------------------------------------------------
// cool: collective occupations over a cooperativity grid with a configured
// cavity-heating curve n_c(n_p).

inline std::vector<OccupationRow> cmd_cool(const DeviceConfig& cfg,
                                           const std::vector<double>& coop_grid,
                                           const std::string& out_dir) {
    cfg.validate();
    if (coop_grid.empty()) throw config_error("cool: empty cooperativity grid");
    const double omega_bar = detail::mean_of_vec(cfg.mech.omega_m);
    const double gamma_bar = detail::mean_of_vec(cfg.mech.gamma_m);
    const double n_th_bar = detail::mean_of_vec(cfg.bath_occupation);
    const std::size_t n = cfg.mech.size();
    const int dim = int(n);

    std::vector<OccupationRow> rows;
    for (double c : coop_grid) {
        if (c <= 0) throw config_error("cool: cooperativities must be positive");
        const double np = detail::photons_for_cooperativity(cfg, c);
        const auto pump = PumpContext::from_photon_number(cfg.mech, omega_bar, np);
        BathOccupations baths;
        baths.n_mech = cfg.bath_occupation;
        baths.n_cavity =
            cfg.run.heating_base + cfg.run.heating_per_sqrt_photon * std::sqrt(np);

        const auto cov = covariance_matrix(cfg.mech, cfg.cavity, pump, baths);
        const auto occ = collective_occupations(cov.matrix);

        double gopt_col = 0.0;  // N * mean optomechanical damping
        for (double g : pump.g)
            gopt_col += 4.0 * g * g / cfg.cavity.kappa();
        // heating reaches the mechanics through the internal loss channel only
        const double n_seen =
            baths.n_cavity * cfg.cavity.kappa_0 / cfg.cavity.kappa();
        double bath_inflow = 0.0;  // mean gamma_i n_i of the uniform mode
        for (std::size_t i = 0; i < n; ++i)
            bath_inflow += cfg.mech.gamma_m[i] * cfg.bath_occupation[i] / double(n);
        const double n_rate =
            (bath_inflow + gopt_col * n_seen) / (gamma_bar + gopt_col);

        const Eigen::VectorXcd uniform =
            Eigen::VectorXcd::Constant(dim, 1.0 / std::sqrt(double(dim)));
        for (int k = 0; k < dim; ++k) {
            OccupationRow r;
            r.cooperativity = c;
            r.mode_index = k;
            r.occupation = occ.occupations[std::size_t(k)];
            r.fidelity = std::norm((uniform.adjoint() * occ.vectors.col(k))(0));
            r.rate_equation = k == 0 ? n_rate : n_th_bar;  // bright mode first
            rows.push_back(r);
        }
    }
    write_occupations_csv(detail::out_path(out_dir, "cool_occupations.csv"), rows,
                          detail::meta_for(cfg, cfg.run.seed));
    return rows;
}

// ---------------------------------------------------------------------------
// modeshape: excite-and-release protocol on one collective mode.

struct ModeshapeReport {
    ModeshapeProtocolResult protocol;
    double fidelity_vs_excitation = 0.0;
};

inline ModeshapeReport cmd_modeshape(const DeviceConfig& cfg, int mode_index,
                                     double snr_db, const std::string& out_dir,
                                     std::uint64_t seed) {
    cfg.validate();
    const double omega_bar = detail::mean_of_vec(cfg.mech.omega_m);
    const auto pump_hi = PumpContext::from_photon_number(cfg.mech, omega_bar, 1e8);
    const auto pump_lo = PumpContext::from_photon_number(cfg.mech, omega_bar, 1e3);
    const auto modes =
        collective_eigenmodes(dynamical_matrix(cfg.mech, cfg.cavity, pump_hi));
    int cavity_like = 0;
    for (std::size_t j = 1; j < modes.modes.size(); ++j)
        if (modes.modes[j].cavity_weight > modes.modes[cavity_like].cavity_weight)
            cavity_like = int(j);
    std::vector<int> mech_modes;
    for (std::size_t j = 0; j < modes.modes.size(); ++j)
        if (int(j) != cavity_like) mech_modes.push_back(int(j));
    if (mode_index < 0 || mode_index >= int(mech_modes.size()))
        throw config_error("modeshape: collective-mode index out of range");
    const double drive_omega =
        modes.modes[std::size_t(mech_modes[std::size_t(mode_index)])].frequency;

    const double dt = 1.0 / 50e3;
    const std::size_t n_samples = 1 << 15;
    // calibrate the noise level against the clean record amplitude
    auto clean = simulate_modeshape_protocol(cfg.mech, cfg.cavity, pump_hi, pump_lo,
                                             drive_omega, dt, n_samples, 0.0, seed);
    double amp0 = 0.0;
    for (const auto& z : clean.record.samples) amp0 = std::max(amp0, std::abs(z));
    const double sigma = amp0 * std::pow(10.0, -snr_db / 20.0);

    ModeshapeReport rep;
    rep.protocol = simulate_modeshape_protocol(cfg.mech, cfg.cavity, pump_hi, pump_lo,
                                               drive_omega, dt, n_samples, sigma, seed);
    Eigen::VectorXcd truth = rep.protocol.excitation;
    truth /= truth.norm();
    rep.fidelity_vs_excitation =
        std::norm((truth.adjoint() * rep.protocol.estimate.shape)(0));

    const auto meta = detail::meta_for(cfg, seed);
    nlohmann::json j = modeshape_json(rep.protocol.estimate);
    j["fidelity_vs_excitation"] = rep.fidelity_vs_excitation;
    write_json(detail::out_path(out_dir, "modeshape.json"), j, meta);
    write_ringdown_csv(detail::out_path(out_dir, "ringdown.csv"), rep.protocol.record,
                       meta);
    return rep;
}

// ---------------------------------------------------------------------------
// disorder: microwave ensemble statistics and the mechanical sweep.

struct DisorderReport {
    MwDisorderStatistics mw;
    MechDisorderSweep mech;
};

inline DisorderReport cmd_disorder(const DeviceConfig& cfg,
                                   const std::vector<double>& sigma_grid,
                                   const std::vector<double>& coop_grid,
                                   const std::string& out_dir) {
    cfg.validate();
    DisorderSpec spec;
    spec.sigma = cfg.run.disorder_sigma;
    spec.samples = cfg.run.samples;
    spec.seed = cfg.run.seed;
    spec.workers = cfg.run.workers;

    DisorderReport rep;
    rep.mw = mw_disorder_statistics(cfg.circuit, sigma_grid, spec);
    rep.mech = mech_disorder_sweep(cfg.mech, cfg.cavity, spec, coop_grid);

    const auto meta = detail::meta_for(cfg, spec.seed);
    std::vector<StatisticRow> mw_rows;
    for (std::size_t k = 0; k < sigma_grid.size(); ++k) {
        const auto& p = rep.mw.points[k];
        const double n = std::sqrt(double(spec.samples));
        // normal-approximation band from the ensemble spread
        auto band = [&](double mean, double se, const char* name) {
            mw_rows.push_back({sigma_grid[k], name, mean, mean - 1.645 * se * n,
                               mean + 1.645 * se * n});
        };
        band(rad_to_hz(p.mean_splitting_pair1), rad_to_hz(p.splitting_pair1_stderr),
             "pair1_splitting_hz");
        band(rad_to_hz(p.mean_splitting_pair2), rad_to_hz(p.splitting_pair2_stderr),
             "pair2_splitting_hz");
        mw_rows.push_back({sigma_grid[k], "primary_fidelity", p.mean_fidelity_primary,
                           p.min_fidelity_primary, 1.0});
        mw_rows.push_back({sigma_grid[k], "auxiliary_fidelity",
                           p.mean_fidelity_auxiliary, p.min_fidelity_auxiliary, 1.0});
    }
    write_statistics_csv(detail::out_path(out_dir, "disorder_mw.csv"), "sigma",
                         mw_rows, meta);

    std::vector<StatisticRow> mech_rows;
    for (std::size_t j = 0; j < coop_grid.size(); ++j)
        for (std::size_t s = 0; s < cfg.mech.size(); ++s)
            mech_rows.push_back({coop_grid[j],
                                 "mode" + std::to_string(s) + "_linewidth_hz",
                                 rad_to_hz(rep.mech.linewidth_mean[j][s]),
                                 rad_to_hz(rep.mech.linewidth_p5[j][s]),
                                 rad_to_hz(rep.mech.linewidth_p95[j][s])});
    write_statistics_csv(detail::out_path(out_dir, "disorder_mech.csv"),
                         "cooperativity", mech_rows, meta);

    nlohmann::json jm;
    jm["samples"] = spec.samples;
    jm["sigma_grid"] = sigma_grid;
    jm["perturbative_warning"] = rep.mw.perturbative_warning;
    write_json(detail::out_path(out_dir, "disorder_meta.json"), jm, meta);
    return rep;
}

// ---------------------------------------------------------------------------
// fit: re-ingest an emitted reflection trace and recover the pump parameters.

inline OmitFitResult cmd_fit_omit(const DeviceConfig& cfg, const std::string& trace_path,
                                  double photons_guess, const std::string& out_dir) {
    cfg.validate();
    if (photons_guess <= 0)
        throw config_error("fit: need a positive photon-number guess");
    const auto trace = read_complex_spectrum_csv(trace_path);
    std::vector<double> g_guess;
    for (double g0 : cfg.mech.g0)
        g_guess.push_back(1.1 * g0 * std::sqrt(photons_guess));
    const double omega_bar = detail::mean_of_vec(cfg.mech.omega_m);
    auto fit = fit_omit(trace, cfg.mech, cfg.cavity.kappa_ex, g_guess,
                        0.9 * cfg.cavity.kappa(), omega_bar + hz_to_rad(500.0));

    std::vector<double> values, errors;
    for (std::size_t i = 0; i < fit.g.size(); ++i) {
        values.push_back(rad_to_hz(fit.g[i]));
        errors.push_back(rad_to_hz(std::sqrt(fit.report.covariance(i, i))));
    }
    const auto k = Eigen::Index(fit.g.size());
    values.push_back(rad_to_hz(fit.kappa));
    errors.push_back(rad_to_hz(std::sqrt(fit.report.covariance(k, k))));
    values.push_back(rad_to_hz(fit.detuning));
    errors.push_back(rad_to_hz(std::sqrt(fit.report.covariance(k + 1, k + 1))));
    write_json(detail::out_path(out_dir, "fit_omit.json"),
               fit_result_json(fit.report.names, values, errors,
                               fit.report.residual_norm2, cfg.run.seed),
               detail::meta_for(cfg, cfg.run.seed));
    return fit;
}

// ---------------------------------------------------------------------------
// asym: sideband-asymmetry thermometry through the auxiliary cavity, either
// on provided spectra or on a pair synthesized from the config.

struct AsymReport {
    double n_m = 0.0;
    double n_m_true = 0.0;  // embedded value when synthesizing
    AsymmetryEstimate estimate;
};

inline AsymReport cmd_asym(const DeviceConfig& cfg, double occupation, double n_aux,
                           const std::string& out_dir,
                           const std::string& anti_stokes_file = "",
                           const std::string& stokes_file = "") {
    cfg.validate();
    if (n_aux < 0) throw config_error("asym: n_aux must be nonnegative");
    const double omega_bar = detail::mean_of_vec(cfg.mech.omega_m);
    const double kappa_aux = cfg.auxiliary.kappa();
    const double g_aux = hz_to_rad(50.0);  // nominal readout-tone coupling
    const double gp = aux_sideband_rate(g_aux, kappa_aux, omega_bar, 0.0, true);
    const double gm = aux_sideband_rate(g_aux, kappa_aux, omega_bar, 0.0, false);

    AsymReport rep;
    RealSpectrum s_as, s_s;
    if (!anti_stokes_file.empty()) {
        s_as = read_real_spectrum_csv(anti_stokes_file);
        s_s = read_real_spectrum_csv(stokes_file);
    } else {
        if (occupation <= 0) throw config_error("asym: occupation must be positive");
        rep.n_m_true = occupation;
        const auto areas = expected_sideband_areas(occupation, n_aux, gp, gm);
        const double width = detail::mean_of_vec(cfg.mech.gamma_m) * 20.0;
        auto grid = linspace(-40.0 * width, 40.0 * width, 2001);
        auto lorentz = [&](double area) {
            RealSpectrum s;
            s.freq = grid;
            for (double w : grid)
                s.value.push_back(area / pi * (width / 2.0) /
                                  (w * w + width * width / 4.0));
            return s;
        };
        s_as = lorentz(areas.first);
        s_s = lorentz(areas.second);
    }
    rep.estimate = occupation_from_sideband_areas(spectrum_area(s_as),
                                                  spectrum_area(s_s), gp / gm, n_aux);
    rep.n_m = rep.estimate.n_m;

    nlohmann::json j;
    j["n_m"] = rep.n_m;
    j["corrected_ratio"] = rep.estimate.corrected_ratio;
    j["ground_state_limited"] = rep.estimate.ground_state_limited;
    write_json(detail::out_path(out_dir, "asym.json"), j,
               detail::meta_for(cfg, cfg.run.seed));
    return rep;
}

}  // namespace hexamer

#endif
