#ifndef HEXAMER_CONFIG_HPP
#define HEXAMER_CONFIG_HPP

// Device configuration file: a single JSON document with circuit, cavity,
// mechanics, measurement-chain and run sections. All frequencies are plain Hz
// at the file boundary and converted to angular units on ingestion.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hexamer/circuit.hpp"
#include "hexamer/dynamics.hpp"
#include "hexamer/spectra.hpp"

namespace hexamer {

struct RunSection {
    std::uint64_t seed = 1;
    int samples = 100;
    int workers = 1;
    double disorder_sigma = 1e-3;
    // cavity-heating model used by the cooling sweep: n_c = base + slope sqrt(n_p)
    double heating_base = 0.0;
    double heating_per_sqrt_photon = 0.0;
};

struct DeviceConfig {
    CircuitParams circuit;
    CavityParams cavity;      // primary (narrow, anti-symmetric) mode
    CavityParams auxiliary;   // broad symmetric readout mode
    MechanicalParams mech;
    std::vector<double> bath_occupation;  // per oscillator
    MeasurementChain chain;
    double chain_loss_db = 0.0;
    RunSection run;
    bool resolved_sideband = false;  // mean Omega_m >> kappa (primary)

    void validate() const {
        circuit.validate();
        cavity.validate();
        auxiliary.validate();
        mech.validate();
        chain.validate();
        if (bath_occupation.size() != mech.size())
            throw config_error("config: need one bath occupation per oscillator");
        for (double n : bath_occupation)
            if (n < 0) throw config_error("config: bath occupations must be nonnegative");
        if (run.samples < 1 || run.workers < 1)
            throw config_error("config: run.samples and run.workers must be positive");
        if (run.disorder_sigma < 0)
            throw config_error("config: run.disorder_sigma must be nonnegative");
    }
};

namespace detail {

inline double get_num(const nlohmann::json& j, const char* section, const char* key) {
    if (!j.contains(key))
        throw config_error(std::string("config: missing ") + section + "." + key);
    if (!j[key].is_number())
        throw config_error(std::string("config: ") + section + "." + key +
                           " must be a number");
    return j[key].get<double>();
}

inline std::vector<double> get_vec(const nlohmann::json& j, const char* section,
                                   const char* key) {
    if (!j.contains(key) || !j[key].is_array())
        throw config_error(std::string("config: missing array ") + section + "." + key);
    std::vector<double> v;
    for (const auto& x : j[key]) {
        if (!x.is_number())
            throw config_error(std::string("config: ") + section + "." + key +
                               " must hold numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

inline CavityParams parse_cavity(const nlohmann::json& j, const char* section) {
    CavityParams c;
    c.omega_c = hz_to_rad(get_num(j, section, "omega_c_hz"));
    c.kappa_ex = hz_to_rad(get_num(j, section, "kappa_ex_hz"));
    c.kappa_0 = hz_to_rad(get_num(j, section, "kappa_0_hz"));
    if (j.contains("kappa_hz")) {  // redundant total must agree with the split
        const double total = get_num(j, section, "kappa_hz");
        if (std::abs(hz_to_rad(total) - c.kappa()) > 1e-6 * c.kappa())
            throw config_error(std::string("config: ") + section +
                               ".kappa_hz contradicts kappa_ex_hz + kappa_0_hz");
    }
    return c;
}

}  // namespace detail

inline DeviceConfig parse_config(const nlohmann::json& j) {
    using detail::get_num;
    using detail::get_vec;
    for (const char* sec : {"circuit", "cavity", "auxiliary", "mechanics", "chain"})
        if (!j.contains(sec))
            throw config_error(std::string("config: missing section ") + sec);

    DeviceConfig cfg;
    const auto& jc = j["circuit"];
    cfg.circuit.drum_capacitance = get_num(jc, "circuit", "drum_capacitance_f");
    cfg.circuit.stray_capacitance = get_num(jc, "circuit", "stray_capacitance_f");
    cfg.circuit.self_inductance = get_num(jc, "circuit", "self_inductance_h");
    cfg.circuit.mutual_m1 = get_num(jc, "circuit", "mutual_m1_h");
    cfg.circuit.mutual_m2 = get_num(jc, "circuit", "mutual_m2_h");
    cfg.circuit.mutual_m3 = get_num(jc, "circuit", "mutual_m3_h");
    const auto rates = get_vec(jc, "circuit", "site_feedline_rates_hz");
    if (rates.size() != 4)
        throw config_error("config: circuit.site_feedline_rates_hz needs the four "
                           "distances from the feedline");
    for (int i = 0; i < 4; ++i)
        cfg.circuit.site_feedline_rates[std::size_t(i)] = hz_to_rad(rates[std::size_t(i)]);

    cfg.cavity = detail::parse_cavity(j["cavity"], "cavity");
    cfg.auxiliary = detail::parse_cavity(j["auxiliary"], "auxiliary");

    const auto& jm = j["mechanics"];
    const auto om = get_vec(jm, "mechanics", "omega_m_hz");
    const auto g0 = get_vec(jm, "mechanics", "g0_hz");
    cfg.bath_occupation = get_vec(jm, "mechanics", "bath_occupation");
    std::vector<double> gamma;
    if (jm.contains("gamma_hz")) {
        gamma = get_vec(jm, "mechanics", "gamma_hz");
    } else {
        const auto q = get_vec(jm, "mechanics", "quality");
        if (q.size() != om.size())
            throw config_error("config: mechanics.quality length mismatch");
        for (std::size_t i = 0; i < om.size(); ++i) {
            if (q[i] <= 0) throw config_error("config: quality factors must be positive");
            gamma.push_back(om[i] / q[i]);
        }
    }
    if (g0.size() != om.size() || gamma.size() != om.size())
        throw config_error("config: mechanics arrays must have equal length");
    for (std::size_t i = 0; i < om.size(); ++i) {
        cfg.mech.omega_m.push_back(hz_to_rad(om[i]));
        cfg.mech.gamma_m.push_back(hz_to_rad(gamma[i]));
        cfg.mech.g0.push_back(hz_to_rad(g0[i]));
    }

    const auto& jh = j["chain"];
    cfg.chain.gain = get_num(jh, "chain", "gain");
    cfg.chain_loss_db = get_num(jh, "chain", "loss_db");
    cfg.chain.eta = std::pow(10.0, -cfg.chain_loss_db / 10.0);
    if (jh.contains("n_added_amp"))
        cfg.chain = MeasurementChain::from_amplifier(
            cfg.chain.gain, get_num(jh, "chain", "n_added_amp"), cfg.chain.eta);
    else
        cfg.chain.n_added = get_num(jh, "chain", "n_added");

    if (j.contains("run")) {
        const auto& jr = j["run"];
        if (jr.contains("seed")) cfg.run.seed = jr["seed"].get<std::uint64_t>();
        if (jr.contains("samples")) cfg.run.samples = jr["samples"].get<int>();
        if (jr.contains("workers")) cfg.run.workers = jr["workers"].get<int>();
        if (jr.contains("disorder_sigma"))
            cfg.run.disorder_sigma = get_num(jr, "run", "disorder_sigma");
        if (jr.contains("heating_base"))
            cfg.run.heating_base = get_num(jr, "run", "heating_base");
        if (jr.contains("heating_per_sqrt_photon"))
            cfg.run.heating_per_sqrt_photon =
                get_num(jr, "run", "heating_per_sqrt_photon");
    }

    cfg.validate();
    double om_mean = 0.0;
    for (double w : cfg.mech.omega_m) om_mean += w / double(cfg.mech.size());
    cfg.resolved_sideband = om_mean > 10.0 * cfg.cavity.kappa();
    return cfg;
}

inline nlohmann::json config_to_json(const DeviceConfig& cfg) {
    cfg.validate();
    nlohmann::json j;
    j["circuit"] = {
        {"drum_capacitance_f", cfg.circuit.drum_capacitance},
        {"stray_capacitance_f", cfg.circuit.stray_capacitance},
        {"self_inductance_h", cfg.circuit.self_inductance},
        {"mutual_m1_h", cfg.circuit.mutual_m1},
        {"mutual_m2_h", cfg.circuit.mutual_m2},
        {"mutual_m3_h", cfg.circuit.mutual_m3},
        {"site_feedline_rates_hz",
         {rad_to_hz(cfg.circuit.site_feedline_rates[0]),
          rad_to_hz(cfg.circuit.site_feedline_rates[1]),
          rad_to_hz(cfg.circuit.site_feedline_rates[2]),
          rad_to_hz(cfg.circuit.site_feedline_rates[3])}}};
    auto cav_json = [](const CavityParams& c) {
        return nlohmann::json{{"omega_c_hz", rad_to_hz(c.omega_c)},
                              {"kappa_ex_hz", rad_to_hz(c.kappa_ex)},
                              {"kappa_0_hz", rad_to_hz(c.kappa_0)}};
    };
    j["cavity"] = cav_json(cfg.cavity);
    j["auxiliary"] = cav_json(cfg.auxiliary);
    nlohmann::json jm;
    for (std::size_t i = 0; i < cfg.mech.size(); ++i) {
        jm["omega_m_hz"].push_back(rad_to_hz(cfg.mech.omega_m[i]));
        jm["gamma_hz"].push_back(rad_to_hz(cfg.mech.gamma_m[i]));
        jm["g0_hz"].push_back(rad_to_hz(cfg.mech.g0[i]));
        jm["bath_occupation"].push_back(cfg.bath_occupation[i]);
    }
    j["mechanics"] = jm;
    j["chain"] = {{"gain", cfg.chain.gain},
                  {"n_added", cfg.chain.n_added},
                  {"loss_db", cfg.chain_loss_db}};
    j["run"] = {{"seed", cfg.run.seed},
                {"samples", cfg.run.samples},
                {"workers", cfg.run.workers},
                {"disorder_sigma", cfg.run.disorder_sigma},
                {"heating_base", cfg.run.heating_base},
                {"heating_per_sqrt_photon", cfg.run.heating_per_sqrt_photon}};
    return j;
}

inline DeviceConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config: invalid JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

inline void save_config(const DeviceConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("config: cannot write " + path);
    out << config_to_json(cfg).dump(2) << "\n";
}

// FNV-1a over the canonical (key-sorted) serialization; identifies the exact
// physical configuration in output metadata.
inline std::string config_hash(const DeviceConfig& cfg) {
    const std::string s = config_to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace hexamer

#endif
