#include "psbp/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "psbp/render.hpp"

namespace psbp {

namespace {

constexpr double kDarkThreshold = 1e-4;
constexpr double kSaturationFraction = 0.999;
constexpr double kDiskRadius = 1.0 - 1e-6;
// Absolute intensity misfit, relative to the pixel brightness, treated as exact.
constexpr double kExactFit = 1e-9;
constexpr int kNeighbourSweeps = 8;

void check_images(const Images& images)
{
    for (const auto& img : images) {
        if (img.width() != images[0].width() || img.height() != images[0].height()) {
            throw ValidationError("input images have mismatched dimensions");
        }
    }
}

void check_lights(const Lights& lights)
{
    for (const auto& l : lights) {
        l.validate();
    }
}

// Woodham's linear solve is meaningful for any independent directions, so it
// only needs them finite and nonzero.
void check_directions(const Lights& lights)
{
    for (const auto& l : lights) {
        if (!l.direction.allFinite() || l.direction.norm() == 0.0) {
            throw ValidationError("light direction must be finite and nonzero");
        }
    }
}

Intensities pixel_intensities(const Images& images, int i, int j)
{
    return {images[0](i, j), images[1](i, j), images[2](i, j)};
}

// Value and derivative of max(0, c)^n (n = 1 for the diffuse lobe).
double clamped_power(double c, double n, double& derivative)
{
    if (c <= 0.0) {
        derivative = 0.0;
        return 0.0;
    }
    if (n == 1.0) {
        derivative = 1.0;
        return c;
    }
    const double v = std::pow(c, n - 1.0);
    derivative = n * v;
    return v * c;
}

} // namespace

Mask valid_input_mask(const Images& images)
{
    check_images(images);
    const int w = images[0].width();
    const int h = images[0].height();
    Mask mask(w, h, 1);
    for (const auto& img : images) {
        const double hi = kSaturationFraction * img.full_scale;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            const double v = img.data[i];
            if (!(v >= kDarkThreshold) || v > hi) {
                mask[i] = 0;
            }
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------

WoodhamResult woodham_normals(const Images& images, const Lights& lights)
{
    check_images(images);
    check_directions(lights);
    Eigen::Matrix3d light_matrix;
    for (int k = 0; k < 3; ++k) {
        light_matrix.row(k) = lights[k].unit().transpose();
        if (!(lights[k].diffuse_intensity > 0.0)) {
            throw ValidationError("woodham_normals: diffuse light intensity must be positive");
        }
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(light_matrix);
    if (std::abs(light_matrix.determinant()) < kZeroThreshold || !lu.isInvertible()) {
        throw ValidationError("woodham_normals: light directions are coplanar");
    }
    const Eigen::Matrix3d inverse = lu.inverse();

    const int w = images[0].width();
    const int h = images[0].height();
    WoodhamResult out{NormalField(w, h), AlbedoMap(w, h, 0.0)};
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            Eigen::Vector3d rhs;
            for (int k = 0; k < 3; ++k) {
                rhs[k] = images[k](i, j) / lights[k].diffuse_intensity;
            }
            const Vec3 b = inverse * rhs;
            const double albedo = b.norm();
            if (!(albedo > 0.0) || !std::isfinite(albedo)) {
                out.normals.mask(i, j) = 0;
                continue;
            }
            out.normals.n(i, j) = b / albedo;
            out.albedo(i, j) = albedo;
        }
    }
    return out;
}

ClosedFormTerms closed_form_terms(const ImagePoint& pt, const Intensities& intensities, const Lights& lights,
                                  double focal)
{
    ClosedFormTerms t;
    for (int k = 0; k < 3; ++k) {
        t.r[k] = intensities[k] * lights[k].direction.norm() / lights[k].diffuse_intensity;
    }
    const Vec3& l1 = lights[0].direction;
    const Vec3& l2 = lights[1].direction;
    const Vec3& l3 = lights[2].direction;
    const double x = pt.x;
    const double y = pt.y;
    const double f = focal;
    const auto& r = t.r;
    t.m1 = r[1] * (f * l1.x() + x * l1.z()) - r[0] * (f * l2.x() + x * l2.z());
    t.m2 = r[1] * (f * l1.y() + y * l1.z()) - r[0] * (f * l2.y() + y * l2.z());
    t.m3 = r[2] * (f * l1.x() + x * l1.z()) - r[0] * (f * l3.x() + x * l3.z());
    t.m4 = r[2] * (f * l1.y() + y * l1.z()) - r[0] * (f * l3.y() + y * l3.z());
    t.h1 = -r[1] * l1.z() + r[0] * l2.z();
    t.h2 = -r[2] * l1.z() + r[0] * l3.z();
    return t;
}

ClosedFormResult lambertian_pps_closed_form(const Images& images, const Lights& lights, const CameraIntrinsics& intr)
{
    check_images(images);
    check_lights(lights);
    intr.validate();
    const int w = images[0].width();
    const int h = images[0].height();
    ClosedFormResult out{GradientField(w, h, GradientKind::LogDepth), AlbedoMap(w, h, 0.0), 0};
    const double f = intr.focal;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const ImagePoint pt = centerize(i, j, intr);
            const Intensities in = pixel_intensities(images, i, j);
            const ClosedFormTerms t = closed_form_terms(pt, in, lights, f);
            const double det = t.det();
            if (!(std::abs(det) >= kZeroThreshold)) {
                out.gradient.mask(i, j) = 0;
                ++out.singular;
                continue;
            }
            const double nu_x = (t.h1 * t.m4 - t.m2 * t.h2) / det;
            const double nu_y = (t.m1 * t.h2 - t.h1 * t.m3) / det;
            out.gradient.gx(i, j) = nu_x;
            out.gradient.gy(i, j) = nu_y;

            const double cosine = lambertian_perspective_factor(pt, nu_x, nu_y, f, lights[0]);
            if (cosine > 0.0) {
                out.albedo(i, j) = in[0] / (lights[0].diffuse_intensity * cosine);
            }
        }
    }
    out.gradient.normalize_masked();
    return out;
}

// ---------------------------------------------------------------------------

std::array<std::size_t, kIndicatorCount> ConditioningReport::violation_counts() const
{
    std::array<std::size_t, kIndicatorCount> counts{};
    for (int e = 0; e < kIndicatorCount; ++e) {
        counts[e] = count_valid(violated[e]);
    }
    return counts;
}

std::array<double, kIndicatorCount> indicator_expressions(const ImagePoint& pt, const Lights& lights)
{
    const double a1 = lights[0].direction.x(), b1 = lights[0].direction.y(), c1 = lights[0].direction.z();
    const double a2 = lights[1].direction.x(), b2 = lights[1].direction.y(), c2 = lights[1].direction.z();
    const double a3 = lights[2].direction.x(), b3 = lights[2].direction.y(), c3 = lights[2].direction.z();
    const double x = pt.x;
    const double y = pt.y;
    return {
        b1 * a3 - a1 * b3,
        b2 * a1 - a2 * b1,
        a2 * b3 - b2 * a3,
        y * a1 * c1 - x * b1 * c1,
        x * b2 * c1 - y * a2 * c1,
        y * a2 * c3 - x * b2 * c3,
        x * c1 * b1 - y * c1 * a1,
        y * c1 * a3 - x * c1 * b3,
        y * c2 * a1 - x * c2 * b1,
        y * a2 * c1 - x * b2 * c1,
        x * c2 * b3 - y * c2 * a3,
    };
}

ConditioningReport sensitivity_indicator(const Lights& lights, int width, int height, const CameraIntrinsics& intr)
{
    intr.validate();
    ConditioningReport report;
    for (auto& m : report.violated) {
        m = Mask(width, height, 0);
    }
    report.det_m = RealGrid(width, height, 0.0);

    Eigen::Matrix3d light_matrix;
    for (int k = 0; k < 3; ++k) {
        light_matrix.row(k) = lights[k].direction.transpose();
    }
    report.lights_non_coplanar = std::abs(light_matrix.determinant()) >= kZeroThreshold;

    Lights unit_lights = lights;
    for (auto& l : unit_lights) {
        l.diffuse_intensity = 1.0;
    }
    const Intensities ones{1.0, 1.0, 1.0};
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            const ImagePoint pt = centerize(i, j, intr);
            const auto expr = indicator_expressions(pt, lights);
            for (int e = 0; e < kIndicatorCount; ++e) {
                report.violated[e](i, j) = std::abs(expr[e]) < kZeroThreshold ? 1 : 0;
            }
            report.det_m(i, j) = std::abs(closed_form_terms(pt, ones, unit_lights, intr.focal).det());
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

PixelModel make_pixel_model(const ImagePoint& pt, const Lights& lights, const Material& m, double focal)
{
    PixelModel pm;
    pm.point = pt;
    pm.focal = focal;
    pm.shininess = m.shininess;
    for (int k = 0; k < 3; ++k) {
        pm.light_unit[k] = lights[k].unit();
        pm.halfway[k] = halfway_vector(pt, focal, lights[k]);
        pm.diffuse_scale[k] = m.kd * lights[k].diffuse_intensity;
        pm.specular_scale[k] = m.ks * lights[k].specular_intensity;
    }
    return pm;
}

PixelModel make_orthographic_pixel_model(const Lights& lights, const Material& m)
{
    PixelModel pm;
    pm.shininess = m.shininess;
    for (int k = 0; k < 3; ++k) {
        pm.light_unit[k] = lights[k].unit();
        pm.halfway[k] = halfway_vector_orthographic(lights[k]);
        pm.diffuse_scale[k] = m.kd * lights[k].diffuse_intensity;
        pm.specular_scale[k] = m.ks * lights[k].specular_intensity;
    }
    return pm;
}

namespace {

// Intensities for a unit normal `n` and, when requested, their derivatives
// along the two normal tangents dn[0], dn[1].
Eigen::Vector3d shade_with_derivative(const PixelModel& pm, const Vec3& n, const std::array<Vec3, 2>* dn,
                                      Eigen::Matrix<double, 3, 2>* jacobian)
{
    Eigen::Vector3d out;
    for (int k = 0; k < 3; ++k) {
        double dd = 0.0;
        double ds = 0.0;
        const double diffuse = clamped_power(pm.light_unit[k].dot(n), 1.0, dd);
        const double specular = clamped_power(pm.halfway[k].dot(n), pm.shininess, ds);
        out[k] = pm.diffuse_scale[k] * diffuse + pm.specular_scale[k] * specular;
        if (jacobian) {
            for (int c = 0; c < 2; ++c) {
                (*jacobian)(k, c) = pm.diffuse_scale[k] * dd * pm.light_unit[k].dot((*dn)[c]) +
                                    pm.specular_scale[k] * ds * pm.halfway[k].dot((*dn)[c]);
            }
        }
    }
    return out;
}

} // namespace

Eigen::Vector3d model_intensities(const PixelModel& pm, double nu_x, double nu_y, Eigen::Matrix<double, 3, 2>* jacobian)
{
    const double f = pm.focal;
    const double x = pm.point.x;
    const double y = pm.point.y;
    const Vec3 a(f * nu_x, f * nu_y, 1.0 + x * nu_x + y * nu_y);
    const double len = a.norm();
    const Vec3 n = a / len;
    if (!jacobian) {
        return shade_with_derivative(pm, n, nullptr, nullptr);
    }
    // d(a/|a|) = (I - n n^T) da / |a|
    const Vec3 ex(f, 0.0, x);
    const Vec3 ey(0.0, f, y);
    const std::array<Vec3, 2> dn{(ex - n * n.dot(ex)) / len, (ey - n * n.dot(ey)) / len};
    return shade_with_derivative(pm, n, &dn, jacobian);
}

RatioTerms ratio_terms(const ImagePoint& pt, double focal, const LightSource& light_m, const LightSource& light_n)
{
    const Vec3 ray(pt.x, pt.y, focal);
    const double p = ray.norm();
    const double gm = light_m.direction.norm();
    const double gn = light_n.direction.norm();
    RatioTerms t;
    t.Q = light_m.direction - gm * ray;
    t.T = light_n.direction - gn * ray;
    t.k = light_n.direction.z() * p - focal * gn;
    t.e = light_m.direction.z() * p - focal * gm;
    return t;
}

Eigen::Vector3d blinn_phong_residuals(const PixelModel& pm, const Intensities& intensities, double nu_x, double nu_y,
                                      Eigen::Matrix<double, 3, 2>* jacobian)
{
    Eigen::Matrix<double, 3, 2> dr;
    const Eigen::Vector3d model = model_intensities(pm, nu_x, nu_y, jacobian ? &dr : nullptr);
    Eigen::Vector3d res;
    for (int e = 0; e < 3; ++e) {
        const int a = kRatioPairs[e][0];
        const int b = kRatioPairs[e][1];
        res[e] = intensities[a] * model[b] - intensities[b] * model[a];
        if (jacobian) {
            jacobian->row(e) = intensities[a] * dr.row(b) - intensities[b] * dr.row(a);
        }
    }
    return res;
}

Eigen::Vector3d blinn_phong_residuals(double nu_x, double nu_y, const ImagePoint& pt, const Intensities& intensities,
                                      const Lights& lights, const Material& m, const CameraIntrinsics& intr)
{
    const PixelModel pm = make_pixel_model(pt, lights, m, intr.focal);
    return blinn_phong_residuals(pm, intensities, nu_x, nu_y);
}

LMResult blinn_phong_pps_pixel(const PixelModel& pm, const Intensities& intensities, const Eigen::Vector2d& start,
                               const LMConfig& lm)
{
    const ResidualFn residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return blinn_phong_residuals(pm, intensities, v[0], v[1]);
    };
    const JacobianFn jacobian = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
        Eigen::Matrix<double, 3, 2> jac;
        blinn_phong_residuals(pm, intensities, v[0], v[1], &jac);
        return jac;
    };
    return levenberg_marquardt(residual, jacobian, Eigen::VectorXd(start), lm);
}

namespace {

// A ratio solution is only physical if every light actually illuminates the
// point; otherwise all residuals can vanish trivially.
bool lit_by_all(const Eigen::Vector3d& model)
{
    return model.minCoeff() > 0.0;
}

// Extra LM starts. Ratio residuals are invariant to the overall brightness of
// the model, so a pixel can have several exact roots; the seeds let the solver
// find all of them.
const std::vector<Eigen::Vector2d>& seed_points()
{
    static const std::vector<Eigen::Vector2d> seeds = [] {
        std::vector<Eigen::Vector2d> s{Eigen::Vector2d(0.0, 0.0)};
        for (int a = -2; a <= 2; ++a) {
            for (int b = -2; b <= 2; ++b) {
                if (a != 0 || b != 0) {
                    s.emplace_back(0.75 * a, 0.75 * b);
                }
            }
        }
        return s;
    }();
    return seeds;
}

struct Candidate {
    Eigen::Vector2d x;
    double misfit = std::numeric_limits<double>::infinity();
    bool found = false;
    bool numerical_failure = false;
};

// Runs LM from `start` and keeps the result if it explains the absolute
// intensities better than the current best.
void try_start(const PixelModel& pm, const Intensities& in, const Eigen::Vector2d& start, const LMConfig& lm,
               Candidate& best)
{
    try {
        const LMResult r = blinn_phong_pps_pixel(pm, in, start, lm);
        if (!r.converged) {
            return;
        }
        const Eigen::Vector3d model = model_intensities(pm, r.x[0], r.x[1]);
        if (!lit_by_all(model)) {
            return;
        }
        const double misfit = (Eigen::Vector3d(in[0], in[1], in[2]) - model).norm();
        if (misfit < best.misfit) {
            best.x = r.x;
            best.misfit = misfit;
            best.found = true;
        }
    } catch (const NumericalError&) {
        best.numerical_failure = true;
    }
}

} // namespace

PerspectiveSolveResult blinn_phong_pps_solve(const Images& images, const Lights& lights, const Material& m,
                                             const CameraIntrinsics& intr, const LMConfig& lm)
{
    check_images(images);
    check_lights(lights);
    m.validate();
    intr.validate();
    lm.validate();
    const int w = images[0].width();
    const int h = images[0].height();
    const Mask input = valid_input_mask(images);
    const ClosedFormResult init = lambertian_pps_closed_form(images, lights, intr);

    Grid<Candidate> best(w, h);
    Mask exact(w, h, 0);
    auto is_exact = [&](int i, int j) {
        const Intensities in = pixel_intensities(images, i, j);
        const double scale = 1.0 + std::abs(in[0]) + std::abs(in[1]) + std::abs(in[2]);
        return best(i, j).found && best(i, j).misfit <= kExactFit * scale;
    };
    auto solve_from = [&](int i, int j, const std::vector<Eigen::Vector2d>& starts) {
        const Intensities in = pixel_intensities(images, i, j);
        try {
            const PixelModel pm = make_pixel_model(centerize(i, j, intr), lights, m, intr.focal);
            for (const Eigen::Vector2d& start : starts) {
                try_start(pm, in, start, lm, best(i, j));
                if (is_exact(i, j)) {
                    break;
                }
            }
        } catch (const NumericalError&) {
            best(i, j).numerical_failure = true;
        }
        exact(i, j) = is_exact(i, j) ? 1 : 0;
    };

    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!input(i, j)) {
                continue;
            }
            std::vector<Eigen::Vector2d> starts;
            if (init.gradient.mask(i, j)) {
                starts.emplace_back(init.gradient.gx(i, j), init.gradient.gy(i, j));
            }
            starts.insert(starts.end(), seed_points().begin(), seed_points().end());
            solve_from(i, j, starts);
        }
    }

    // Narrow specular basins can hide the physical root from every fixed seed;
    // exact solutions of neighbouring pixels are tried as further starts.
    for (int sweep = 0; sweep < kNeighbourSweeps; ++sweep) {
        bool changed = false;
        for (int k = 0; k < w * h; ++k) {
            const int idx = (sweep % 2 == 0) ? k : w * h - 1 - k;
            const int i = idx % w;
            const int j = idx / w;
            if (!input(i, j) || exact(i, j)) {
                continue;
            }
            std::vector<Eigen::Vector2d> starts;
            for (const auto& [di, dj] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
                const int ni = i + di;
                const int nj = j + dj;
                if (ni >= 0 && nj >= 0 && ni < w && nj < h && exact(ni, nj)) {
                    starts.push_back(best(ni, nj).x);
                }
            }
            if (starts.empty()) {
                continue;
            }
            solve_from(i, j, starts);
            changed = changed || exact(i, j);
        }
        if (!changed) {
            break;
        }
    }

    PerspectiveSolveResult out{GradientField(w, h, GradientKind::LogDepth), {}};
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const Candidate& c = best(i, j);
            if (!input(i, j)) {
                out.gradient.mask(i, j) = 0;
                ++out.stats.input_masked;
            } else if (!c.found) {
                out.gradient.mask(i, j) = 0;
                ++(c.numerical_failure ? out.stats.unsolvable : out.stats.not_converged);
            } else {
                out.gradient.gx(i, j) = c.x[0];
                out.gradient.gy(i, j) = c.x[1];
                ++out.stats.solved;
            }
        }
    }
    out.gradient.normalize_masked();
    return out;
}

namespace {

Vec3 disk_to_normal(double a, double b)
{
    const double rr = a * a + b * b;
    if (rr > kDiskRadius * kDiskRadius) {
        const double s = kDiskRadius / std::sqrt(rr);
        a *= s;
        b *= s;
    }
    return Vec3(a, b, std::sqrt(std::max(0.0, 1.0 - a * a - b * b)));
}

} // namespace

OrthographicSolveResult blinn_phong_ortho_solve(const Images& images, const Lights& lights, const Material& m,
                                                const LMConfig& lm)
{
    check_images(images);
    check_lights(lights);
    m.validate();
    lm.validate();
    const int w = images[0].width();
    const int h = images[0].height();
    const Mask input = valid_input_mask(images);
    const WoodhamResult init = woodham_normals(images, lights);
    const PixelModel pm = make_orthographic_pixel_model(lights, m);

    OrthographicSolveResult out{NormalField(w, h), {}};
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!input(i, j)) {
                out.normals.mask(i, j) = 0;
                ++out.stats.input_masked;
                continue;
            }
            const Intensities in = pixel_intensities(images, i, j);
            const ResidualFn residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                const Vec3 n = disk_to_normal(v[0], v[1]);
                return Eigen::Vector3d(in[0], in[1], in[2]) - shade_with_derivative(pm, n, nullptr, nullptr);
            };
            const JacobianFn jacobian = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
                const Vec3 n = disk_to_normal(v[0], v[1]);
                const std::array<Vec3, 2> dn{Vec3(1.0, 0.0, -n.x() / n.z()), Vec3(0.0, 1.0, -n.y() / n.z())};
                Eigen::Matrix<double, 3, 2> jac;
                shade_with_derivative(pm, n, &dn, &jac);
                return -jac;
            };

            Eigen::Vector2d start(0.0, 0.0);
            if (init.normals.mask(i, j) && init.normals.n(i, j).z() > 0.0) {
                start = {init.normals.n(i, j).x(), init.normals.n(i, j).y()};
            }
            try {
                const LMResult r = levenberg_marquardt(residual, jacobian, Eigen::VectorXd(start), lm);
                const Vec3 n = disk_to_normal(r.x[0], r.x[1]);
                if (!r.converged || !lit_by_all(shade_with_derivative(pm, n, nullptr, nullptr))) {
                    out.normals.mask(i, j) = 0;
                    ++out.stats.not_converged;
                    continue;
                }
                out.normals.n(i, j) = n;
                ++out.stats.solved;
            } catch (const NumericalError&) {
                out.normals.mask(i, j) = 0;
                ++out.stats.unsolvable;
            }
        }
    }
    return out;
}

} // namespace psbp
