#ifndef HEXAMER_COMMON_HPP
#define HEXAMER_COMMON_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace hexamer {

using cplx = std::complex<double>;

constexpr double pi = 3.14159265358979323846;
constexpr double two_pi = 2.0 * pi;
constexpr double hbar = 1.054571817e-34;   // J s
constexpr double k_boltzmann = 1.380649e-23; // J/K

// All internal frequencies/rates are angular (rad/s); file and CLI boundaries
// speak Hz. Keep the conversions named so call sites stay readable.
inline double hz_to_rad(double f) { return two_pi * f; }
inline double rad_to_hz(double w) { return w / two_pi; }

// Error taxonomy. Config problems, numerical breakdowns and fit failures map
// to distinct CLI exit codes.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Frequency grid + complex values (reflection traces).
struct ComplexSpectrum {
    std::vector<double> freq;  // rad/s, strictly increasing
    std::vector<cplx> value;
};

// Frequency grid + real values (power spectral densities).
struct RealSpectrum {
    std::vector<double> freq;  // rad/s, strictly increasing
    std::vector<double> value;
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n < 2) throw config_error("linspace needs at least two points");
    std::vector<double> v(n);
    const double step = (b - a) / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + step * double(i);
    v.back() = b;
    return v;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
    if (a <= 0 || b <= 0) throw config_error("logspace endpoints must be positive");
    std::vector<double> v = linspace(std::log(a), std::log(b), n);
    for (double& x : v) x = std::exp(x);
    return v;
}

inline void require_increasing(const std::vector<double>& grid, const char* what) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw config_error(std::string(what) + ": grid must be strictly increasing");
}

}  // namespace hexamer

#endif
