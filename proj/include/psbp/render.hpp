#pragma once

#include <array>
#include <optional>
#include <string>

#include "psbp/core.hpp"
#include "psbp/geometry.hpp"

namespace psbp {

/// Intermediate quantities of the expanded perspective Blinn-Phong equation,
/// kept for diagnostics. `w` and `p` are what the renderer actually uses.
struct BlinnPhongTerms {
    double w = 0.0;  ///< y nu_y + x nu_x + 1
    double p = 0.0;  ///< |(x, y, f)|
    double g = 0.0;  ///< |L|
    double r = 0.0;  ///< f^2 (nu_x^2 + nu_y^2)
    double d = 0.0;  ///< gamma p - f |L|
    Vec3 D = Vec3::Zero();
    double G = 0.0;  ///< |L| / p
};

BlinnPhongTerms blinn_phong_terms(const ImagePoint& pt, double nu_x, double nu_y, double focal, const LightSource& light);

/// Lambertian shading factor L.N / |L| for the perspective normal, without
/// clamping: (f a nu_x + f b nu_y + c w) / (sqrt((f nu_x)^2 + (f nu_y)^2 + w^2) |L|).
double lambertian_perspective_factor(const ImagePoint& pt, double nu_x, double nu_y, double focal,
                                     const LightSource& light);

/// Single-pixel intensities. Dot products clamp at zero.
double shade_lambertian(const Vec3& normal, const LightSource& light, const Material& m);
double shade_blinn_phong(const Vec3& normal, const Vec3& halfway, const LightSource& light, const Material& m);

Image render_lambertian_orthographic(const NormalField& normals, const LightSource& light, const Material& m);
Image render_lambertian_perspective(const GradientField& grad, const LightSource& light, const Material& m,
                                    const CameraIntrinsics& intr);
Image render_blinn_phong_orthographic(const NormalField& normals, const LightSource& light, const Material& m);
Image render_blinn_phong_perspective(const GradientField& grad, const LightSource& light, const Material& m,
                                     const CameraIntrinsics& intr);

enum class Projection { Orthographic, Perspective };
enum class ReflectanceModel { Lambertian, BlinnPhong };

/// Depth of the front sphere surface along each pixel ray; misses are masked.
DepthMap make_sphere_depth(const CameraIntrinsics& intr, const Vec3& center, double radius, int width, int height,
                           Projection projection = Projection::Perspective);

/// Exact orthographic sphere normals, oriented like perspective_normal.
NormalField make_sphere_normals_orthographic(const CameraIntrinsics& intr, const Vec3& center, double radius,
                                             int width, int height);

/// Gradient of ln z with respect to image-plane coordinates. Central
/// differences, one-sided at image and mask borders; pixels with no valid
/// neighbour along an axis are masked.
GradientField log_depth_gradient(const DepthMap& depth, const CameraIntrinsics& intr);

/// Orthographic normals (-z_x, -z_y, 1)/|.| from the same finite differences.
NormalField orthographic_normals_from_depth(const DepthMap& depth, const CameraIntrinsics& intr);

struct SceneSpec {
    enum class Source { Sphere, DepthMap };
    Source source = Source::Sphere;
    Vec3 center = Vec3(0, 0, 4);
    double radius = 1.0;
    std::optional<DepthMap> depth;
    int width = 128;
    int height = 128;
    Material material;
    std::array<LightSource, 3> lights;
    CameraIntrinsics intrinsics;
    Projection projection = Projection::Perspective;

    void validate() const;
};

struct RenderedScene {
    std::array<Image, 3> images;
    DepthMap depth;
    GradientField gradient;  ///< log-depth, perspective only
    NormalField normals;     ///< orthographic only
};

RenderedScene render_scene(const SceneSpec& scene, ReflectanceModel model);

} // namespace psbp
