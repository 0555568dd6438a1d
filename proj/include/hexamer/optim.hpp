#ifndef HEXAMER_OPTIM_HPP
#define HEXAMER_OPTIM_HPP

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "hexamer/common.hpp"

namespace hexamer {

struct LeastSquaresOptions {
    int max_iterations = 400;
    double step_tol = 1e-12;      // relative parameter step
    double gradient_tol = 1e-14;  // infinity norm of J^T r, scaled
    double lambda0 = 1e-3;        // initial damping
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // parameter covariance estimate
    double residual_norm2 = 0.0; // sum of squared residuals
    bool converged = false;
    int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

namespace detail {

inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& f,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& r0) {
    const int n = int(x.size());
    Eigen::MatrixXd J(r0.size(), n);
    for (int j = 0; j < n; ++j) {
        const double h = std::max(1e-8, 1e-7 * std::abs(x[j]));
        Eigen::VectorXd xp = x;
        xp[j] += h;
        J.col(j) = (f(xp) - r0) / h;
    }
    return J;
}

}  // namespace detail

// Damped Gauss-Newton (Levenberg-Marquardt) on a generic residual vector.
// Complex traces are handled by the caller stacking real and imaginary parts.
inline LeastSquaresResult levenberg_marquardt(const ResidualFn& f,
                                              Eigen::VectorXd x,
                                              LeastSquaresOptions opt = {}) {
    LeastSquaresResult out;
    Eigen::VectorXd r = f(x);
    double cost = r.squaredNorm();
    double lambda = opt.lambda0;

    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        Eigen::MatrixXd J = detail::numeric_jacobian(f, x, r);
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tol * (1.0 + cost)) {
            converged = true;
            break;
        }
        bool stepped = false;
        for (int tries = 0; tries < 60; ++tries) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-30);
            Eigen::VectorXd step = A.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            // damping has shrunk the step to nothing: local minimum
            if (step.norm() <= opt.step_tol *
                                   (x.norm() + std::numeric_limits<double>::epsilon())) {
                converged = true;
                break;
            }
            Eigen::VectorXd xn = x + step;
            Eigen::VectorXd rn = f(xn);
            const double cn = rn.squaredNorm();
            if (std::isfinite(cn) && cn < cost) {
                const double rel_step =
                    step.norm() / (x.norm() + std::numeric_limits<double>::epsilon());
                x = xn;
                r = rn;
                const double improvement = cost - cn;
                cost = cn;
                lambda = std::max(lambda * 0.3, 1e-14);
                stepped = true;
                if (rel_step < opt.step_tol ||
                    improvement <= opt.step_tol * (1.0 + cost))
                    converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped || converged) {
            converged = converged || stepped;
            break;
        }
    }

    out.params = x;
    out.residual_norm2 = cost;
    out.converged = converged;
    out.iterations = it;

    // Covariance from the final Jacobian; sigma^2 estimated from residuals.
    Eigen::MatrixXd J = detail::numeric_jacobian(f, x, r);
    Eigen::MatrixXd JtJ = J.transpose() * J;
    const double dof = std::max<double>(1.0, double(r.size()) - double(x.size()));
    const double sigma2 = cost / dof;
    Eigen::MatrixXd inv = JtJ.completeOrthogonalDecomposition().pseudoInverse();
    out.covariance = sigma2 * inv;
    return out;
}

// Ordinary linear least squares y ~ X beta, returning coefficients and their
// covariance. Used by the calibration fits that are linear in the parameters.
inline LeastSquaresResult linear_least_squares(const Eigen::MatrixXd& X,
                                               const Eigen::VectorXd& y) {
    LeastSquaresResult out;
    const Eigen::MatrixXd XtX = X.transpose() * X;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) /
                        svd.singularValues()(svd.singularValues().size() - 1);
    if (!std::isfinite(cond) || cond > 1e12)
        throw fit_error("linear least squares: design matrix is degenerate");
    out.params = svd.solve(y);
    const Eigen::VectorXd r = y - X * out.params;
    out.residual_norm2 = r.squaredNorm();
    const double dof = std::max<double>(1.0, double(y.size()) - double(X.cols()));
    out.covariance = (out.residual_norm2 / dof) * XtX.inverse();
    out.converged = true;
    return out;
}

}  // namespace hexamer

#endif
