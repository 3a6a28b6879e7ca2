#pragma once

#include <functional>

#include <Eigen/Core>

namespace phaseinfo {

// Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems.
// Residuals are weighted by sqrt(w); covariance is (J^T W J)^-1, scaled by
// the reduced chi-square when `scale_covariance` is set (unweighted fits).
struct LmOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;  // relative parameter step
    double lambda0 = 1e-3;
    bool scale_covariance = false;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;  // sqrt(sum w r^2)
    int iterations = 0;
    bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

LmResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& weights, const LmOptions& opts = {});

}  // namespace phaseinfo
