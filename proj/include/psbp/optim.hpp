#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace psbp {

struct LMConfig {
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    int max_iter = 100;
    double step_tol = 1e-10;
    double residual_tol = 1e-12;

    void validate() const;
};

enum class LMStop { StepTol, ResidualTol, MaxIter };

struct LMResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    LMStop reason = LMStop::MaxIter;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Central-difference Jacobian (m x p), step 1e-6 * max(1, |x_i|).
Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& residual, const Eigen::VectorXd& x);

/// Damped Gauss-Newton. Each step solves (J^T J + lambda I) d = -J^T F; the
/// damping shrinks after an accepted step and grows after a rejected one.
/// Without an analytic `jacobian` a central-difference one is used.
///
/// Throws NumericalError if F(x0) is not finite or the damping exceeds 1e12
/// without producing an acceptable step.
LMResult levenberg_marquardt(const ResidualFn& residual, const std::optional<JacobianFn>& jacobian,
                             const Eigen::VectorXd& x0, const LMConfig& cfg = {});

} // namespace psbp
