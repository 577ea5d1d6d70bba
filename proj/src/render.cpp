#include "psbp/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psbp {

BlinnPhongTerms blinn_phong_terms(const ImagePoint& pt, double nu_x, double nu_y, double focal, const LightSource& light)
{
    BlinnPhongTerms t;
    t.w = pt.y * nu_y + pt.x * nu_x + 1.0;
    t.p = std::sqrt(pt.x * pt.x + pt.y * pt.y + focal * focal);
    t.g = light.direction.norm();
    t.r = focal * focal * (nu_x * nu_x + nu_y * nu_y);
    t.d = light.direction.z() * t.p - focal * t.g;
    t.G = t.g / t.p;
    t.D = light.direction - t.G * Vec3(pt.x, pt.y, focal);
    return t;
}

double lambertian_perspective_factor(const ImagePoint& pt, double nu_x, double nu_y, double focal,
                                     const LightSource& light)
{
    const Vec3& l = light.direction;
    const double w = pt.y * nu_y + pt.x * nu_x + 1.0;
    const double fx = focal * nu_x;
    const double fy = focal * nu_y;
    const double num = fx * l.x() + fy * l.y() + l.z() * w;
    const double den = std::sqrt(fx * fx + fy * fy + w * w) * l.norm();
    return num / den;
}

double shade_lambertian(const Vec3& normal, const LightSource& light, const Material& m)
{
    const double cosine = light.direction.dot(normal) / light.direction.norm();
    return m.kd * std::max(0.0, cosine) * light.diffuse_intensity;
}

double shade_blinn_phong(const Vec3& normal, const Vec3& halfway, const LightSource& light, const Material& m)
{
    const double diffuse = shade_lambertian(normal, light, m);
    const double hn = std::max(0.0, halfway.dot(normal));
    return diffuse + m.ks * std::pow(hn, m.shininess) * light.specular_intensity;
}

namespace {

Image blank_image(int width, int height)
{
    Image img;
    img.data = RealGrid(width, height, 0.0);
    img.origin = Origin::PrincipalPoint;
    img.full_scale = std::numeric_limits<double>::infinity();
    return img;
}

double perspective_diffuse(const ImagePoint& pt, double nu_x, double nu_y, double focal, const LightSource& light,
                           const Material& m)
{
    const double cosine = lambertian_perspective_factor(pt, nu_x, nu_y, focal, light);
    return m.kd * std::max(0.0, cosine) * light.diffuse_intensity;
}

} // namespace

Image render_lambertian_orthographic(const NormalField& normals, const LightSource& light, const Material& m)
{
    Image img = blank_image(normals.width(), normals.height());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (normals.mask[i]) {
            img.data[i] = shade_lambertian(normals.n[i], light, m);
        }
    }
    return img;
}

Image render_blinn_phong_orthographic(const NormalField& normals, const LightSource& light, const Material& m)
{
    Image img = blank_image(normals.width(), normals.height());
    const Vec3 halfway = halfway_vector_orthographic(light);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (normals.mask[i]) {
            img.data[i] = shade_blinn_phong(normals.n[i], halfway, light, m);
        }
    }
    return img;
}

Image render_lambertian_perspective(const GradientField& grad, const LightSource& light, const Material& m,
                                    const CameraIntrinsics& intr)
{
    if (grad.kind != GradientKind::LogDepth) {
        throw ValidationError("render_lambertian_perspective expects a log-depth gradient field");
    }
    Image img = blank_image(grad.width(), grad.height());
    img.origin = (intr.principal_x == 0.0 && intr.principal_y == 0.0) ? Origin::Corner : Origin::PrincipalPoint;
    for (int j = 0; j < grad.height(); ++j) {
        for (int i = 0; i < grad.width(); ++i) {
            if (!grad.mask(i, j)) {
                continue;
            }
            const ImagePoint pt = centerize(i, j, intr);
            img.data(i, j) = perspective_diffuse(pt, grad.gx(i, j), grad.gy(i, j), intr.focal, light, m);
        }
    }
    return img;
}

Image render_blinn_phong_perspective(const GradientField& grad, const LightSource& light, const Material& m,
                                     const CameraIntrinsics& intr)
{
    if (grad.kind != GradientKind::LogDepth) {
        throw ValidationError("render_blinn_phong_perspective expects a log-depth gradient field");
    }
    Image img = blank_image(grad.width(), grad.height());
    img.origin = (intr.principal_x == 0.0 && intr.principal_y == 0.0) ? Origin::Corner : Origin::PrincipalPoint;
    for (int j = 0; j < grad.height(); ++j) {
        for (int i = 0; i < grad.width(); ++i) {
            if (!grad.mask(i, j)) {
                continue;
            }
            const ImagePoint pt = centerize(i, j, intr);
            const double nu_x = grad.gx(i, j);
            const double nu_y = grad.gy(i, j);
            double value = perspective_diffuse(pt, nu_x, nu_y, intr.focal, light, m);
            if (m.ks != 0.0) {
                try {
                    const Vec3 n = perspective_normal(pt, nu_x, nu_y, intr.focal);
                    const Vec3 h = halfway_vector(pt, intr.focal, light);
                    value += m.ks * std::pow(std::max(0.0, h.dot(n)), m.shininess) * light.specular_intensity;
                } catch (const NumericalError&) {
                    value = 0.0;
                }
            }
            img.data(i, j) = value;
        }
    }
    return img;
}

DepthMap make_sphere_depth(const CameraIntrinsics& intr, const Vec3& center, double radius, int width, int height,
                           Projection projection)
{
    intr.validate();
    if (!(radius > 0.0)) {
        throw ValidationError("sphere radius must be positive");
    }
    if (!(center.z() - radius > 0.0)) {
        throw ValidationError("sphere must lie entirely in front of the camera");
    }
    DepthMap out(width, height);
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            const ImagePoint pt = centerize(i, j, intr);
            double z = 0.0;
            bool hit = false;
            if (projection == Projection::Perspective) {
                const Vec3 dir(-pt.x, -pt.y, intr.focal);
                const double a = dir.squaredNorm();
                const double b = dir.dot(center);
                const double c = center.squaredNorm() - radius * radius;
                const double disc = b * b - a * c;
                if (disc >= 0.0) {
                    const double t = (b - std::sqrt(disc)) / a;
                    z = t * intr.focal;
                    hit = t > 0.0;
                }
            } else {
                const double dx = pt.x - center.x();
                const double dy = pt.y - center.y();
                const double s = radius * radius - dx * dx - dy * dy;
                if (s >= 0.0) {
                    z = center.z() - std::sqrt(s);
                    hit = z > 0.0;
                }
            }
            out.z(i, j) = hit ? z : 0.0;
            out.mask(i, j) = hit ? 1 : 0;
        }
    }
    return out;
}

NormalField make_sphere_normals_orthographic(const CameraIntrinsics& intr, const Vec3& center, double radius,
                                             int width, int height)
{
    const DepthMap depth = make_sphere_depth(intr, center, radius, width, height, Projection::Orthographic);
    NormalField out(width, height);
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            if (!depth.mask(i, j)) {
                out.mask(i, j) = 0;
                continue;
            }
            const ImagePoint pt = centerize(i, j, intr);
            const Vec3 surface(pt.x, pt.y, depth.z(i, j));
            Vec3 n = (center - surface) / radius;
            if (!(n.z() > 0.0)) {
                out.mask(i, j) = 0;
                continue;
            }
            out.n(i, j) = n.normalized();
        }
    }
    return out;
}

namespace {

// Derivative of `value` along one axis at (i, j): central where both
// neighbours are valid, one-sided otherwise. False if neither exists.
template <typename F>
bool axis_difference(const Mask& mask, int i, int j, int di, int dj, double step, F value, double& out)
{
    const int fi = i + di;
    const int fj = j + dj;
    const int bi = i - di;
    const int bj = j - dj;
    const bool fwd = fi < mask.width() && fj < mask.height() && mask(fi, fj);
    const bool bwd = bi >= 0 && bj >= 0 && mask(bi, bj);
    if (fwd && bwd) {
        out = (value(fi, fj) - value(bi, bj)) / (2.0 * step);
    } else if (fwd) {
        out = (value(fi, fj) - value(i, j)) / step;
    } else if (bwd) {
        out = (value(i, j) - value(bi, bj)) / step;
    } else {
        return false;
    }
    return true;
}

} // namespace

GradientField log_depth_gradient(const DepthMap& depth, const CameraIntrinsics& intr)
{
    depth.validate();
    const int w = depth.width();
    const int h = depth.height();
    GradientField out(w, h, GradientKind::LogDepth);
    auto nu = [&](int i, int j) { return std::log(depth.z(i, j)); };
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!depth.mask(i, j)) {
                out.mask(i, j) = 0;
                continue;
            }
            double gx = 0.0;
            double gy = 0.0;
            const bool ok = axis_difference(depth.mask, i, j, 1, 0, intr.pitch_x, nu, gx) &&
                            axis_difference(depth.mask, i, j, 0, 1, intr.pitch_y, nu, gy);
            out.mask(i, j) = ok ? 1 : 0;
            out.gx(i, j) = gx;
            out.gy(i, j) = gy;
        }
    }
    out.normalize_masked();
    return out;
}

NormalField orthographic_normals_from_depth(const DepthMap& depth, const CameraIntrinsics& intr)
{
    depth.validate();
    const int w = depth.width();
    const int h = depth.height();
    NormalField out(w, h);
    auto z = [&](int i, int j) { return depth.z(i, j); };
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            double zx = 0.0;
            double zy = 0.0;
            const bool ok = depth.mask(i, j) && axis_difference(depth.mask, i, j, 1, 0, intr.pitch_x, z, zx) &&
                            axis_difference(depth.mask, i, j, 0, 1, intr.pitch_y, z, zy);
            out.mask(i, j) = ok ? 1 : 0;
            if (ok) {
                out.n(i, j) = Vec3(-zx, -zy, 1.0).normalized();
            }
        }
    }
    return out;
}

void SceneSpec::validate() const
{
    material.validate();
    intrinsics.validate();
    for (const auto& l : lights) {
        l.validate();
    }
    if (width <= 0 || height <= 0) {
        throw ValidationError("scene width and height must be positive");
    }
    if (source == Source::Sphere) {
        if (!(radius > 0.0)) {
            throw ValidationError("scene.radius must be positive");
        }
        if (projection == Projection::Perspective && !(center.z() - radius > 0.0)) {
            throw ValidationError("scene.center: sphere must lie in front of the camera");
        }
    } else {
        if (!depth) {
            throw ValidationError("scene.depth: no depth map loaded");
        }
        if (depth->width() != width || depth->height() != height) {
            throw ValidationError("scene.depth: dimensions do not match the scene size");
        }
        depth->validate();
    }
}

RenderedScene render_scene(const SceneSpec& scene, ReflectanceModel model)
{
    scene.validate();
    RenderedScene out;
    const CameraIntrinsics& intr = scene.intrinsics;
    if (scene.source == SceneSpec::Source::Sphere) {
        out.depth = make_sphere_depth(intr, scene.center, scene.radius, scene.width, scene.height, scene.projection);
    } else {
        out.depth = *scene.depth;
    }

    Material material = scene.material;
    if (model == ReflectanceModel::Lambertian) {
        material.ks = 0.0;
    }

    if (scene.projection == Projection::Perspective) {
        out.gradient = log_depth_gradient(out.depth, intr);
        for (std::size_t k = 0; k < 3; ++k) {
            out.images[k] = model == ReflectanceModel::Lambertian
                                ? render_lambertian_perspective(out.gradient, scene.lights[k], material, intr)
                                : render_blinn_phong_perspective(out.gradient, scene.lights[k], material, intr);
        }
    } else {
        out.normals = scene.source == SceneSpec::Source::Sphere
                          ? make_sphere_normals_orthographic(intr, scene.center, scene.radius, scene.width,
                                                             scene.height)
                          : orthographic_normals_from_depth(out.depth, intr);
        for (std::size_t k = 0; k < 3; ++k) {
            out.images[k] = model == ReflectanceModel::Lambertian
                                ? render_lambertian_orthographic(out.normals, scene.lights[k], material)
                                : render_blinn_phong_orthographic(out.normals, scene.lights[k], material);
        }
    }
    return out;
}

} // namespace psbp
