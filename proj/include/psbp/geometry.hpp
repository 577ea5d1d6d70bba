#pragma once

#include "psbp/core.hpp"

namespace psbp {

/// Metric image-plane coordinates, same unit as the focal length.
struct ImagePoint {
    double x = 0.0;
    double y = 0.0;
};

/// Pixel coordinates to image-plane coordinates about the principal point.
ImagePoint centerize(double px, double py, const CameraIntrinsics& intr);

/// Inverse of centerize.
void uncenterize(const ImagePoint& p, const CameraIntrinsics& intr, double& px, double& py);

/// Scene point imaged at `p` for depth `z`. The image plane sits behind the
/// lens, so the point is (z / f) * (-x, -y, f).
Vec3 surface_point(const ImagePoint& p, double z, double focal);

/// Inverse of surface_point: the image point at which a scene point projects.
ImagePoint project(const Vec3& point, double focal);

/// Unit surface normal for log-depth gradients (nu_x, nu_y), along
/// (f nu_x, f nu_y, 1 + x nu_x + y nu_y).
Vec3 perspective_normal(const ImagePoint& p, double nu_x, double nu_y, double focal);

/// Unit direction from the scene point imaged at `p` towards the camera,
/// expressed in the same orientation as perspective_normal.
Vec3 view_direction(const ImagePoint& p, double focal);

/// Normalized sum of the unit light and view directions at `p`.
Vec3 halfway_vector(const ImagePoint& p, double focal, const LightSource& light);

/// Halfway vector for an orthographic camera (view along +z).
Vec3 halfway_vector_orthographic(const LightSource& light);

struct GradientConversion {
    GradientField field;
    std::size_t degenerate = 0;
};

/// Converts an orientation field into log-depth gradients by inverting
/// perspective_normal pixel-wise. Pixels whose denominator vanishes are masked.
GradientConversion normals_to_perspective_gradient(const NormalField& normals, const CameraIntrinsics& intr);

} // namespace psbp
