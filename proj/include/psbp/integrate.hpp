#pragma once

#include "psbp/core.hpp"

namespace psbp {

enum class IntegrationSolver {
    Automatic,       ///< cosine transform on a full mask, conjugate gradient otherwise
    CosineTransform,
    ConjugateGradient,
};

/// Where gradient samples live relative to the potential.
enum class GradientSampling {
    Staggered,  ///< gx(i, j) targets (u(i+1, j) - u(i, j)) / spacing_x
    Centered,   ///< gx(i, j) is the derivative at the pixel; edges use the mean of both ends
};

/// Least-squares integration with the five-point Neumann Laplacian.
struct IntegrationConfig {
    IntegrationSolver solver = IntegrationSolver::Automatic;
    GradientSampling sampling = GradientSampling::Centered;
    double spacing_x = 1.0;
    double spacing_y = 1.0;
    double cg_tol = 1e-10;
    int cg_max_iter = 0;  ///< 0 selects 10 * pixel count

    void validate() const;
};

/// Forward differences (u(i+1) - u(i)) / spacing, zero on the last column/row.
/// poisson_integrate with staggered sampling inverts this exactly.
void discrete_gradient(const RealGrid& u, double spacing_x, double spacing_y, RealGrid& gx, RealGrid& gy);

/// Potential u minimizing sum |grad u - g|^2 over edges whose end points are
/// both unmasked. The result has zero mean over the mask; masked entries are 0.
/// Throws NumericalError if conjugate gradient exhausts its budget.
RealGrid poisson_integrate(const GradientField& g, const IntegrationConfig& cfg = {});

/// z = exp(nu) on the mask. Throws NumericalError naming the pixel if |nu| > 700.
DepthMap exp_depth(const RealGrid& nu, const Mask& mask);

struct AlignedDepth {
    DepthMap aligned;
    double mse_raw = 0.0;
    double mse_normalized = 0.0;
    double log_offset = 0.0;
};

/// Rescales `est` by exp(c), with c the least-squares offset between ln est
/// and ln gt on the joint mask, and reports the depth errors.
AlignedDepth align_depth(const DepthMap& est, const DepthMap& gt);

} // namespace psbp
