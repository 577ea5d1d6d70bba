#include "psbp/geometry.hpp"

#include <cmath>

namespace psbp {

namespace {
constexpr double kDegenerateDenominator = 1e-8;
}

ImagePoint centerize(double px, double py, const CameraIntrinsics& intr)
{
    return {intr.pitch_x * (px - intr.principal_x), intr.pitch_y * (py - intr.principal_y)};
}

void uncenterize(const ImagePoint& p, const CameraIntrinsics& intr, double& px, double& py)
{
    px = p.x / intr.pitch_x + intr.principal_x;
    py = p.y / intr.pitch_y + intr.principal_y;
}

Vec3 surface_point(const ImagePoint& p, double z, double focal)
{
    return (z / focal) * Vec3(-p.x, -p.y, focal);
}

ImagePoint project(const Vec3& point, double focal)
{
    return {-focal * point.x() / point.z(), -focal * point.y() / point.z()};
}

Vec3 perspective_normal(const ImagePoint& p, double nu_x, double nu_y, double focal)
{
    const double w = p.y * nu_y + p.x * nu_x + 1.0;
    const Vec3 n(focal * nu_x, focal * nu_y, w);
    const double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
        throw NumericalError("perspective_normal: degenerate normal");
    }
    return n / len;
}

Vec3 view_direction(const ImagePoint& p, double focal)
{
    const Vec3 v(-p.x, -p.y, focal);
    const double len = v.norm();
    if (!(len > 0.0)) {
        throw NumericalError("view_direction: zero view vector");
    }
    return v / len;
}

Vec3 halfway_vector(const ImagePoint& p, double focal, const LightSource& light)
{
    const double ln = light.direction.norm();
    if (!(ln > 0.0)) {
        throw NumericalError("halfway_vector: zero light direction");
    }
    const Vec3 h = light.direction / ln + view_direction(p, focal);
    const double len = h.norm();
    if (len < 1e-12) {
        throw NumericalError("halfway_vector: light anti-parallel to view direction");
    }
    return h / len;
}

Vec3 halfway_vector_orthographic(const LightSource& light)
{
    const double ln = light.direction.norm();
    if (!(ln > 0.0)) {
        throw NumericalError("halfway_vector: zero light direction");
    }
    const Vec3 h = light.direction / ln + Vec3(0, 0, 1);
    const double len = h.norm();
    if (len < 1e-12) {
        throw NumericalError("halfway_vector: light anti-parallel to view direction");
    }
    return h / len;
}

GradientConversion normals_to_perspective_gradient(const NormalField& normals, const CameraIntrinsics& intr)
{
    intr.validate();
    const int w = normals.width();
    const int h = normals.height();
    GradientConversion out{GradientField(w, h, GradientKind::LogDepth), 0};
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            if (!normals.mask(i, j)) {
                out.field.mask(i, j) = 0;
                continue;
            }
            const Vec3& n = normals.n(i, j);
            const ImagePoint p = centerize(i, j, intr);
            // f n3 - x n1 - y n2 is the (scaled) depth-independent third
            // component of the unnormalized perspective normal.
            const double d = intr.focal * n.z() - p.x * n.x() - p.y * n.y();
            if (std::abs(d) < kDegenerateDenominator) {
                out.field.mask(i, j) = 0;
                ++out.degenerate;
                continue;
            }
            out.field.gx(i, j) = n.x() / d;
            out.field.gy(i, j) = n.y() / d;
        }
    }
    out.field.normalize_masked();
    return out;
}

} // namespace psbp
