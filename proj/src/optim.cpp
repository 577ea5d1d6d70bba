#include "psbp/optim.hpp"

#include <algorithm>
#include <cmath>

#include "psbp/core.hpp"

namespace psbp {

namespace {
constexpr double kMaxLambda = 1e12;
}

void LMConfig::validate() const
{
    if (!(lambda0 > 0.0 && lambda_up > 0.0 && lambda_down > 0.0 && step_tol > 0.0 && residual_tol > 0.0)) {
        throw ValidationError("LM configuration values must be positive");
    }
    if (max_iter < 1) {
        throw ValidationError("LM max_iter must be at least 1");
    }
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& residual, const Eigen::VectorXd& x)
{
    const Eigen::VectorXd f0 = residual(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        const Eigen::VectorXd fp = residual(xp);
        xp[i] = x[i] - h;
        const Eigen::VectorXd fm = residual(xp);
        xp[i] = x[i];
        jac.col(i) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

LMResult levenberg_marquardt(const ResidualFn& residual, const std::optional<JacobianFn>& jacobian,
                             const Eigen::VectorXd& x0, const LMConfig& cfg)
{
    cfg.validate();
    LMResult result;
    result.x = x0;
    Eigen::VectorXd f = residual(x0);
    if (!f.allFinite()) {
        throw NumericalError("levenberg_marquardt: residual is not finite at the initial point");
    }
    double cost = f.squaredNorm();
    result.residual_norm = std::sqrt(cost);
    if (result.residual_norm <= cfg.residual_tol) {
        result.converged = true;
        result.reason = LMStop::ResidualTol;
        return result;
    }

    const Eigen::Index p = x0.size();
    double lambda = cfg.lambda0;
    Eigen::VectorXd& x = result.x;

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        result.iterations = iter;
        const Eigen::MatrixXd jac = jacobian ? (*jacobian)(x) : finite_difference_jacobian(residual, x);
        if (!jac.allFinite()) {
            throw NumericalError("levenberg_marquardt: Jacobian is not finite");
        }
        const Eigen::MatrixXd normal = jac.transpose() * jac;
        const Eigen::VectorXd gradient = jac.transpose() * f;

        // Inner loop: raise the damping until the step reduces the cost.
        while (true) {
            const Eigen::MatrixXd damped = normal + lambda * Eigen::MatrixXd::Identity(p, p);
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            const Eigen::VectorXd step = -ldlt.solve(gradient);
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                lambda *= cfg.lambda_up;
                if (lambda > kMaxLambda) {
                    throw NumericalError("levenberg_marquardt: damped system could not be solved");
                }
                continue;
            }

            const double step_norm = step.norm();
            if (step_norm <= cfg.step_tol * (x.norm() + cfg.step_tol)) {
                result.converged = true;
                result.reason = LMStop::StepTol;
                return result;
            }

            const Eigen::VectorXd candidate = x + step;
            const Eigen::VectorXd f_new = residual(candidate);
            const double cost_new = f_new.allFinite() ? f_new.squaredNorm() : HUGE_VAL;
            if (cost_new < cost) {
                x = candidate;
                f = f_new;
                cost = cost_new;
                result.residual_norm = std::sqrt(cost);
                lambda = std::max(lambda / cfg.lambda_down, 1e-300);
                break;
            }
            lambda *= cfg.lambda_up;
            if (lambda > kMaxLambda) {
                throw NumericalError("levenberg_marquardt: damping exceeded 1e12 without an acceptable step");
            }
        }

        if (result.residual_norm <= cfg.residual_tol) {
            result.converged = true;
            result.reason = LMStop::ResidualTol;
            return result;
        }
    }
    result.converged = false;
    result.reason = LMStop::MaxIter;
    return result;
}

} // namespace psbp
