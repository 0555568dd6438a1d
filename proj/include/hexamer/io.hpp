#ifndef HEXAMER_IO_HPP
#define HEXAMER_IO_HPP

// Plot-ready CSV/JSON emission and re-ingestion. Every CSV starts with '#'
// metadata lines (config hash, seed) followed by a column-name header; all
// frequencies are Hz at the file boundary.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hexamer/common.hpp"
#include "hexamer/circuit.hpp"
#include "hexamer/ringdown.hpp"

namespace hexamer {

struct OutputMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string rng = "splitmix64+mt19937_64";
};

namespace detail {

inline std::ofstream open_csv(const std::string& path, const OutputMeta& meta,
                              const std::string& columns) {
    std::ofstream out(path);
    if (!out) throw config_error("io: cannot write " + path);
    out << "# config_hash=" << meta.config_hash << "\n";
    out << "# seed=" << meta.seed << "\n";
    out << "# rng=" << meta.rng << "\n";
    out << columns << "\n";
    out << std::setprecision(17);
    return out;
}

inline std::vector<double> parse_csv_row(const std::string& line, const char* what) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            row.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw config_error(std::string(what) + ": malformed CSV value '" + cell + "'");
        }
    }
    return row;
}

// Rows of a CSV after '#' comments and the column header line.
inline std::vector<std::vector<double>> read_csv_rows(const std::string& path,
                                                      std::size_t n_cols,
                                                      const char* what) {
    std::ifstream in(path);
    if (!in) throw config_error(std::string(what) + ": cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {  // column-name line
            header_seen = true;
            continue;
        }
        auto row = parse_csv_row(line, what);
        if (row.size() != n_cols)
            throw config_error(std::string(what) + ": expected " +
                               std::to_string(n_cols) + " columns in " + path);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline void write_complex_spectrum_csv(const std::string& path,
                                       const ComplexSpectrum& s,
                                       const OutputMeta& meta) {
    auto out = detail::open_csv(path, meta, "freq_hz,re,im");
    for (std::size_t j = 0; j < s.freq.size(); ++j)
        out << rad_to_hz(s.freq[j]) << "," << s.value[j].real() << ","
            << s.value[j].imag() << "\n";
}

inline void write_real_spectrum_csv(const std::string& path, const RealSpectrum& s,
                                    const OutputMeta& meta) {
    auto out = detail::open_csv(path, meta, "freq_hz,psd");
    for (std::size_t j = 0; j < s.freq.size(); ++j)
        out << rad_to_hz(s.freq[j]) << "," << s.value[j] << "\n";
}

inline ComplexSpectrum read_complex_spectrum_csv(const std::string& path) {
    ComplexSpectrum s;
    for (const auto& row : detail::read_csv_rows(path, 3, "reflection trace")) {
        s.freq.push_back(hz_to_rad(row[0]));
        s.value.emplace_back(row[1], row[2]);
    }
    require_increasing(s.freq, "reflection trace");
    return s;
}

inline RealSpectrum read_real_spectrum_csv(const std::string& path) {
    RealSpectrum s;
    for (const auto& row : detail::read_csv_rows(path, 2, "psd trace")) {
        s.freq.push_back(hz_to_rad(row[0]));
        s.value.push_back(row[1]);
    }
    require_increasing(s.freq, "psd trace");
    return s;
}

// Eigen-sweep row: one tracked mode at one pump point.
struct EigenSweepRow {
    double cooperativity = 0.0;
    int mode_index = 0;
    double linewidth = 0.0;    // rad/s
    double freq_offset = 0.0;  // rad/s from the mean mechanical frequency
};

inline void write_eigen_sweep_csv(const std::string& path,
                                  const std::vector<EigenSweepRow>& rows,
                                  const OutputMeta& meta) {
    auto out = detail::open_csv(path, meta,
                                "cooperativity,mode_index,linewidth_hz,freq_offset_hz");
    for (const auto& r : rows)
        out << r.cooperativity << "," << r.mode_index << ","
            << rad_to_hz(r.linewidth) << "," << rad_to_hz(r.freq_offset) << "\n";
}

struct OccupationRow {
    double cooperativity = 0.0;
    int mode_index = 0;
    double occupation = 0.0;
    double fidelity = 0.0;      // overlap with the uniform collective shape
    double rate_equation = 0.0; // independent cross-check value
};

inline void write_occupations_csv(const std::string& path,
                                  const std::vector<OccupationRow>& rows,
                                  const OutputMeta& meta) {
    auto out = detail::open_csv(
        path, meta,
        "cooperativity,mode_index,occupation_quanta,fidelity,rate_equation_quanta");
    for (const auto& r : rows)
        out << r.cooperativity << "," << r.mode_index << "," << r.occupation << ","
            << r.fidelity << "," << r.rate_equation << "\n";
}

inline void write_ringdown_csv(const std::string& path, const RingdownRecord& rec,
                               const OutputMeta& meta) {
    auto out = detail::open_csv(path, meta, "t_s,i,q");
    for (std::size_t j = 0; j < rec.samples.size(); ++j)
        out << rec.dt * double(j) << "," << rec.samples[j].real() << ","
            << rec.samples[j].imag() << "\n";
}

inline RingdownRecord read_ringdown_csv(const std::string& path) {
    const auto rows = detail::read_csv_rows(path, 3, "ringdown record");
    if (rows.size() < 2) throw config_error("ringdown record: need at least two samples");
    RingdownRecord rec;
    rec.dt = rows[1][0] - rows[0][0];
    for (const auto& row : rows) rec.samples.emplace_back(row[1], row[2]);
    rec.validate();
    return rec;
}

// Statistic row of a Monte Carlo sweep; `axis` is sigma or cooperativity.
struct StatisticRow {
    double axis = 0.0;
    std::string statistic;
    double mean = 0.0, p5 = 0.0, p95 = 0.0;
};

inline void write_statistics_csv(const std::string& path, const std::string& axis_name,
                                 const std::vector<StatisticRow>& rows,
                                 const OutputMeta& meta) {
    auto out = detail::open_csv(path, meta, axis_name + ",statistic,mean,p5,p95");
    for (const auto& r : rows)
        out << r.axis << "," << r.statistic << "," << r.mean << "," << r.p5 << ","
            << r.p95 << "\n";
}

// ---------------------------------------------------------------------------
// JSON exports.

inline nlohmann::json mw_modes_json(const MicrowaveModeSet& modes) {
    nlohmann::json j;
    for (int n = 0; n < 6; ++n) {
        j["frequencies_hz"].push_back(rad_to_hz(modes.frequencies[std::size_t(n)]));
        j["mode_rates_hz"].push_back(rad_to_hz(modes.feedline_rates[std::size_t(n)]));
        nlohmann::json re, im;
        for (int m = 0; m < 6; ++m) {
            re.push_back(modes.modeshapes(m, n).real());
            im.push_back(modes.modeshapes(m, n).imag());
        }
        j["modeshape_re"].push_back(re);
        j["modeshape_im"].push_back(im);
    }
    return j;
}

inline nlohmann::json modeshape_json(const ModeshapeEstimate& est) {
    nlohmann::json j;
    for (int i = 0; i < est.shape.size(); ++i) {
        j["eta"].push_back(std::abs(est.shape(i)));
        j["phi_rad"].push_back(std::arg(est.shape(i)));
    }
    j["reference_index"] = est.reference_index;
    return j;
}

inline nlohmann::json fit_result_json(const std::vector<std::string>& names,
                                      const std::vector<double>& values,
                                      const std::vector<double>& errors,
                                      double residual, std::uint64_t seed) {
    if (names.size() != values.size() || errors.size() != values.size())
        throw config_error("fit export: names, values, errors must align");
    nlohmann::json j;
    for (std::size_t i = 0; i < names.size(); ++i) {
        j["parameters"].push_back(names[i]);
        j["values"].push_back(values[i]);
        j["one_sigma_errors"].push_back(errors[i]);
    }
    j["residual"] = residual;
    j["seed"] = seed;
    return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j,
                       const OutputMeta& meta) {
    nlohmann::json doc = j;
    doc["metadata"] = {{"config_hash", meta.config_hash},
                       {"seed", meta.seed},
                       {"rng", meta.rng}};
    std::ofstream out(path);
    if (!out) throw config_error("io: cannot write " + path);
    out << std::setprecision(17) << doc.dump(2) << "\n";
}

}  // namespace hexamer

#endif
