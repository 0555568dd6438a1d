#ifndef HEXAMER_QUADRATURE_HPP
#define HEXAMER_QUADRATURE_HPP

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hexamer/common.hpp"

namespace hexamer {

namespace detail {

// Adaptive Simpson on one segment with absolute tolerance budget.
template <typename F>
double simpson_rec(const F& f, double a, double fa, double b, double fb,
                   double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Integrate f over [a,b] with adaptive Simpson; tol is absolute.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double tol,
                          int max_depth = 40) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// Integrate over the union of [lo,hi] split at the supplied breakpoints.
// Breakpoints outside [lo,hi] are ignored. Each segment gets an equal share of
// the absolute tolerance.
template <typename F>
double integrate_with_breakpoints(const F& f, double lo, double hi,
                                  std::vector<double> breaks, double tol) {
    breaks.push_back(lo);
    breaks.push_back(hi);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> pts;
    for (double x : breaks)
        if (x >= lo && x <= hi) pts.push_back(x);
    double total = 0.0;
    const double seg_tol = tol / double(std::max<std::size_t>(1, pts.size() - 1));
    for (std::size_t i = 1; i < pts.size(); ++i)
        total += integrate_adaptive(f, pts[i - 1], pts[i], seg_tol);
    return total;
}

// Matrix-valued version: shares the function evaluations across all entries,
// with the error controlled on the max-norm. Used for covariance assembly
// where every entry has poles at the same frequencies.
inline Eigen::MatrixXcd integrate_matrix_with_breakpoints(
    const std::function<Eigen::MatrixXcd(double)>& f, double lo, double hi,
    std::vector<double> breaks, double tol, int max_depth = 40) {
    breaks.push_back(lo);
    breaks.push_back(hi);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> pts;
    for (double x : breaks)
        if (x >= lo && x <= hi) pts.push_back(x);

    struct Rec {
        const std::function<Eigen::MatrixXcd(double)>& f;
        Eigen::MatrixXcd run(double a, const Eigen::MatrixXcd& fa, double b,
                             const Eigen::MatrixXcd& fb, double m,
                             const Eigen::MatrixXcd& fm,
                             const Eigen::MatrixXcd& whole, double tol,
                             int depth) {
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const Eigen::MatrixXcd flm = f(lm), frm = f(rm);
            const Eigen::MatrixXcd left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const Eigen::MatrixXcd right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const Eigen::MatrixXcd delta = left + right - whole;
            if (depth <= 0 || delta.cwiseAbs().maxCoeff() <= 15.0 * tol)
                return left + right + delta / 15.0;
            return run(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
                   run(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
        }
    } rec{f};

    Eigen::MatrixXcd total;
    const double seg_tol = tol / double(std::max<std::size_t>(1, pts.size() - 1));
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double a = pts[i - 1], b = pts[i], m = 0.5 * (a + b);
        const Eigen::MatrixXcd fa = f(a), fb = f(b), fm = f(m);
        const Eigen::MatrixXcd whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        Eigen::MatrixXcd part = rec.run(a, fa, b, fb, m, fm, whole, seg_tol, max_depth);
        total = (total.size() == 0) ? part : Eigen::MatrixXcd(total + part);
    }
    return total;
}

}  // namespace hexamer

#endif
