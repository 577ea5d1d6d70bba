#include "psbp/integrate.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <fftw3.h>

namespace psbp {

void IntegrationConfig::validate() const
{
    if (!(spacing_x > 0.0) || !(spacing_y > 0.0)) {
        throw ValidationError("integration spacing must be positive");
    }
    if (!(cg_tol > 0.0)) {
        throw ValidationError("integration cg_tol must be positive");
    }
    if (cg_max_iter < 0) {
        throw ValidationError("integration cg_max_iter must be non-negative");
    }
}

void discrete_gradient(const RealGrid& u, double spacing_x, double spacing_y, RealGrid& gx, RealGrid& gy)
{
    const int w = u.width();
    const int h = u.height();
    gx = RealGrid(w, h, 0.0);
    gy = RealGrid(w, h, 0.0);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (i + 1 < w) {
                gx(i, j) = (u(i + 1, j) - u(i, j)) / spacing_x;
            }
            if (j + 1 < h) {
                gy(i, j) = (u(i, j + 1) - u(i, j)) / spacing_y;
            }
        }
    }
}

namespace {

// Edge targets and validity. Horizontal edge (i, j) joins (i, j)-(i+1, j);
// vertical edge (i, j) joins (i, j)-(i, j+1).
struct EdgeSystem {
    int width = 0;
    int height = 0;
    double inv_hx2 = 1.0;
    double inv_hy2 = 1.0;
    Mask hx_valid;
    Mask hy_valid;
    RealGrid rhs;  // D^T t
};

EdgeSystem build_edges(const GradientField& g, const IntegrationConfig& cfg, const Mask& mask)
{
    const int w = g.width();
    const int h = g.height();
    EdgeSystem sys;
    sys.width = w;
    sys.height = h;
    sys.inv_hx2 = 1.0 / (cfg.spacing_x * cfg.spacing_x);
    sys.inv_hy2 = 1.0 / (cfg.spacing_y * cfg.spacing_y);
    sys.hx_valid = Mask(w, h, 0);
    sys.hy_valid = Mask(w, h, 0);
    sys.rhs = RealGrid(w, h, 0.0);
    const bool centered = cfg.sampling == GradientSampling::Centered;
    auto gx = [&](int i, int j) { return mask(i, j) ? g.gx(i, j) : 0.0; };
    auto gy = [&](int i, int j) { return mask(i, j) ? g.gy(i, j) : 0.0; };

    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (i + 1 < w && mask(i, j) && mask(i + 1, j)) {
                sys.hx_valid(i, j) = 1;
                const double t = centered ? 0.5 * (gx(i, j) + gx(i + 1, j)) : gx(i, j);
                sys.rhs(i, j) -= t / cfg.spacing_x;
                sys.rhs(i + 1, j) += t / cfg.spacing_x;
            }
            if (j + 1 < h && mask(i, j) && mask(i, j + 1)) {
                sys.hy_valid(i, j) = 1;
                const double t = centered ? 0.5 * (gy(i, j) + gy(i, j + 1)) : gy(i, j);
                sys.rhs(i, j) -= t / cfg.spacing_y;
                sys.rhs(i, j + 1) += t / cfg.spacing_y;
            }
        }
    }
    return sys;
}

// y = D^T D x on the edge graph.
void apply_laplacian(const EdgeSystem& sys, const std::vector<double>& x, std::vector<double>& y)
{
    std::fill(y.begin(), y.end(), 0.0);
    const int w = sys.width;
    for (int j = 0; j < sys.height; ++j) {
        for (int i = 0; i < w; ++i) {
            const std::size_t p = sys.hx_valid.index(i, j);
            if (sys.hx_valid[p]) {
                const double d = (x[p] - x[p + 1]) * sys.inv_hx2;
                y[p] += d;
                y[p + 1] -= d;
            }
            if (sys.hy_valid[p]) {
                const std::size_t q = p + static_cast<std::size_t>(w);
                const double d = (x[p] - x[q]) * sys.inv_hy2;
                y[p] += d;
                y[q] -= d;
            }
        }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

RealGrid solve_conjugate_gradient(const EdgeSystem& sys, const IntegrationConfig& cfg)
{
    const std::size_t n = sys.rhs.size();
    std::vector<double> x(n, 0.0);
    std::vector<double> r = sys.rhs.data();
    std::vector<double> p = r;
    std::vector<double> ap(n, 0.0);
    const double b_norm = std::sqrt(dot(r, r));
    RealGrid out(sys.width, sys.height, 0.0);
    if (b_norm == 0.0) {
        return out;
    }
    const int max_iter = cfg.cg_max_iter > 0 ? cfg.cg_max_iter : static_cast<int>(10 * n);
    double rr = dot(r, r);
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        apply_laplacian(sys, p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            break;
        }
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        if (std::sqrt(rr_new) <= cfg.cg_tol * b_norm) {
            converged = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * p[i];
        }
    }
    if (!converged) {
        throw NumericalError("poisson_integrate: conjugate gradient did not converge");
    }
    out.data() = std::move(x);
    return out;
}

RealGrid solve_cosine_transform(const EdgeSystem& sys, const IntegrationConfig& cfg)
{
    const int w = sys.width;
    const int h = sys.height;
    const std::size_t n = sys.rhs.size();
    std::vector<double> buf(sys.rhs.data());
    std::vector<double> spec(n, 0.0);

    // fftw plans are built per call; sizes here are small.
    fftw_plan fwd = fftw_plan_r2r_2d(h, w, buf.data(), spec.data(), FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);

    const double pi = std::numbers::pi;
    for (int l = 0; l < h; ++l) {
        const double ly = (2.0 - 2.0 * std::cos(pi * l / h)) / (cfg.spacing_y * cfg.spacing_y);
        for (int k = 0; k < w; ++k) {
            const double lx = (2.0 - 2.0 * std::cos(pi * k / w)) / (cfg.spacing_x * cfg.spacing_x);
            const std::size_t idx = static_cast<std::size_t>(l) * static_cast<std::size_t>(w) + static_cast<std::size_t>(k);
            spec[idx] = (k == 0 && l == 0) ? 0.0 : spec[idx] / (lx + ly);
        }
    }

    fftw_plan inv = fftw_plan_r2r_2d(h, w, spec.data(), buf.data(), FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
    fftw_execute(inv);
    fftw_destroy_plan(inv);

    RealGrid out(w, h, 0.0);
    const double norm = 1.0 / (4.0 * static_cast<double>(w) * static_cast<double>(h));
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = buf[i] * norm;
    }
    return out;
}

} // namespace

RealGrid poisson_integrate(const GradientField& g, const IntegrationConfig& cfg)
{
    cfg.validate();
    if (!g.gx.same_shape(g.gy) || !g.gx.same_shape(g.mask)) {
        throw ValidationError("poisson_integrate: gradient components have mismatched dimensions");
    }
    const std::size_t valid = count_valid(g.mask);
    if (valid == 0) {
        throw ValidationError("poisson_integrate: empty mask");
    }
    const bool full = valid == g.mask.size();

    IntegrationSolver solver = cfg.solver;
    if (solver == IntegrationSolver::Automatic) {
        solver = full ? IntegrationSolver::CosineTransform : IntegrationSolver::ConjugateGradient;
    }

    // The cosine-transform solver works on the whole rectangle with masked
    // gradients zero-filled.
    const Mask domain = solver == IntegrationSolver::CosineTransform ? full_mask(g.width(), g.height()) : g.mask;
    GradientField filled = g;
    filled.normalize_masked();
    const EdgeSystem sys = build_edges(filled, cfg, domain);

    RealGrid u = solver == IntegrationSolver::CosineTransform ? solve_cosine_transform(sys, cfg)
                                                             : solve_conjugate_gradient(sys, cfg);

    double mean = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (g.mask[i]) {
            mean += u[i];
        }
    }
    mean /= static_cast<double>(valid);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = g.mask[i] ? u[i] - mean : 0.0;
    }
    return u;
}

DepthMap exp_depth(const RealGrid& nu, const Mask& mask)
{
    if (!nu.same_shape(mask)) {
        throw ValidationError("exp_depth: dimension mismatch");
    }
    DepthMap out(nu.width(), nu.height());
    out.mask = mask;
    for (int j = 0; j < nu.height(); ++j) {
        for (int i = 0; i < nu.width(); ++i) {
            if (!mask(i, j)) {
                out.z(i, j) = 0.0;
                continue;
            }
            const double v = nu(i, j);
            if (!std::isfinite(v) || std::abs(v) > 700.0) {
                throw NumericalError("exp_depth: log-depth out of range at pixel (" + std::to_string(i) + ", " +
                                     std::to_string(j) + ")");
            }
            out.z(i, j) = std::exp(v);
        }
    }
    return out;
}

AlignedDepth align_depth(const DepthMap& est, const DepthMap& gt)
{
    if (!est.z.same_shape(gt.z)) {
        throw ValidationError("align_depth: dimension mismatch");
    }
    const Mask joint = mask_and(est.mask, gt.mask);
    const std::size_t n = count_valid(joint);
    if (n == 0) {
        throw ValidationError("align_depth: empty joint mask");
    }
    est.validate();
    gt.validate();

    double offset = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) {
        if (joint[i]) {
            offset += std::log(gt.z[i]) - std::log(est.z[i]);
        }
    }
    offset /= static_cast<double>(n);
    const double scale = std::exp(offset);

    AlignedDepth out;
    out.log_offset = offset;
    out.aligned = est;
    out.aligned.mask = joint;
    for (std::size_t i = 0; i < joint.size(); ++i) {
        out.aligned.z[i] = joint[i] ? est.z[i] * scale : 0.0;
    }
    out.mse_raw = mse(out.aligned.z, gt.z, joint);

    DepthMap gt_joint = gt;
    gt_joint.mask = joint;
    const DepthMap a = normalize_unit_range(out.aligned);
    const DepthMap b = normalize_unit_range(gt_joint);
    out.mse_normalized = mse(a.z, b.z, joint);
    return out;
}

} // namespace psbp
