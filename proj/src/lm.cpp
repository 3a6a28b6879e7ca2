#include "phaseinfo/lm.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "phaseinfo/errors.hpp"

namespace phaseinfo {

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& r0) {
    const int p = static_cast<int>(x.size());
    Eigen::MatrixXd j(r0.size(), p);
    for (int c = 0; c < p; ++c) {
        const double h = 1e-7 * std::max(1.0, std::abs(x(c)));
        Eigen::VectorXd xp = x;
        xp(c) += h;
        j.col(c) = (f(xp) - r0) / h;
    }
    return j;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& weights, const LmOptions& opts) {
    const Eigen::VectorXd sqw = weights.array().sqrt();
    auto wres = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return sqw.asDiagonal() * residuals(x); };

    LmResult out;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd r = wres(x);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) throw FitDiverged("non-finite residuals at the initial point");
    double lambda = opts.lambda0;

    Eigen::MatrixXd j;
    bool fresh_jacobian = false;
    for (out.iterations = 1; out.iterations <= opts.max_iterations; ++out.iterations) {
        if (!fresh_jacobian) {
            j = numeric_jacobian([&](const Eigen::VectorXd& xx) { return wres(xx); }, x, r);
            fresh_jacobian = true;
        }
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
            const Eigen::VectorXd step = ldlt.solve(-g);
            const Eigen::VectorXd xn = x + step;
            const Eigen::VectorXd rn = wres(xn);
            const double cn = rn.squaredNorm();
            if (std::isfinite(cn) && cn <= cost) {
                const double rel = step.norm() / std::max(1e-300, x.norm());
                x = xn;
                r = rn;
                cost = cn;
                fresh_jacobian = false;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel < opts.step_tolerance) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 8.0;
            if (lambda > 1e14) break;
        }
        if (!stepped) {
            // damping exhausted: treat the current point as the optimum
            out.converged = cost >= 0.0;
            break;
        }
        if (out.converged) break;
    }
    if (!std::isfinite(cost)) throw FitDiverged("Levenberg-Marquardt diverged");

    out.params = x;
    out.residual_norm = std::sqrt(cost);

    const Eigen::VectorXd rfin = wres(x);
    j = numeric_jacobian([&](const Eigen::VectorXd& xx) { return wres(xx); }, x, rfin);
    Eigen::MatrixXd jtj = j.transpose() * j;
    jtj.diagonal().array() += 1e-300;
    Eigen::MatrixXd cov = jtj.ldlt().solve(Eigen::MatrixXd::Identity(x.size(), x.size()));
    if (opts.scale_covariance) {
        const int dof = static_cast<int>(rfin.size()) - static_cast<int>(x.size());
        cov *= dof > 0 ? cost / dof : 1.0;
    }
    out.covariance = cov;
    return out;
}

}  // namespace phaseinfo
