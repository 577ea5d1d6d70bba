#pragma once

#include <array>

#include <Eigen/Core>

#include "psbp/core.hpp"
#include "psbp/geometry.hpp"
#include "psbp/optim.hpp"

namespace psbp {

using Lights = std::array<LightSource, 3>;
using Images = std::array<Image, 3>;
using Intensities = std::array<double, 3>;

/// Threshold under which determinants and indicator expressions count as zero.
inline constexpr double kZeroThreshold = 1e-12;

/// Pixels whose three intensities all lie in [1e-4, 0.999 * full_scale].
Mask valid_input_mask(const Images& images);

// ---------------------------------------------------------------------------
// Lambertian

using AlbedoMap = RealGrid;

struct WoodhamResult {
    NormalField normals;
    AlbedoMap albedo;
};

/// Orthographic Lambertian photometric stereo. Throws ValidationError for
/// coplanar lights or mismatched image sizes.
WoodhamResult woodham_normals(const Images& images, const Lights& lights);

/// Coefficients of the 2x2 system M (nu_x, nu_y) = H obtained by eliminating
/// the albedo from the three perspective Lambertian equations.
struct ClosedFormTerms {
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    double h1 = 0, h2 = 0;
    std::array<double, 3> r{};  ///< I_i |L_i| / l_d,i

    double det() const { return m1 * m4 - m2 * m3; }
};

ClosedFormTerms closed_form_terms(const ImagePoint& pt, const Intensities& intensities, const Lights& lights,
                                  double focal);

struct ClosedFormResult {
    GradientField gradient;  ///< log-depth
    AlbedoMap albedo;
    std::size_t singular = 0;
};

ClosedFormResult lambertian_pps_closed_form(const Images& images, const Lights& lights, const CameraIntrinsics& intr);

// ---------------------------------------------------------------------------
// Conditioning

inline constexpr int kIndicatorCount = 11;

struct ConditioningReport {
    std::array<Mask, kIndicatorCount> violated;  ///< 1 where |expression| < kZeroThreshold
    bool lights_non_coplanar = false;
    RealGrid det_m;  ///< |det M| with unit intensities

    std::array<std::size_t, kIndicatorCount> violation_counts() const;
};

/// The eleven sign-free terms of det M, in their conventional order.
std::array<double, kIndicatorCount> indicator_expressions(const ImagePoint& pt, const Lights& lights);

ConditioningReport sensitivity_indicator(const Lights& lights, int width, int height, const CameraIntrinsics& intr);

// ---------------------------------------------------------------------------
// Blinn-Phong

/// Pixel-constant quantities of the perspective Blinn-Phong forward model.
struct PixelModel {
    ImagePoint point;
    double focal = 1.0;
    std::array<Vec3, 3> light_unit;
    std::array<Vec3, 3> halfway;
    std::array<double, 3> diffuse_scale{};   ///< kd * l_d
    std::array<double, 3> specular_scale{};  ///< ks * l_s
    double shininess = 1.0;
};

/// Throws NumericalError when a halfway vector is degenerate.
PixelModel make_pixel_model(const ImagePoint& pt, const Lights& lights, const Material& m, double focal);

/// Orthographic variant: view along +z, no image-point dependence.
PixelModel make_orthographic_pixel_model(const Lights& lights, const Material& m);

/// Model intensities for each light, and optionally their derivatives with
/// respect to (nu_x, nu_y).
Eigen::Vector3d model_intensities(const PixelModel& pm, double nu_x, double nu_y,
                                  Eigen::Matrix<double, 3, 2>* jacobian = nullptr);

/// Diagnostic vectors of the ratio equation for the pair (M, N).
struct RatioTerms {
    Vec3 Q = Vec3::Zero();
    Vec3 T = Vec3::Zero();
    double k = 0.0;
    double e = 0.0;
};

RatioTerms ratio_terms(const ImagePoint& pt, double focal, const LightSource& light_m, const LightSource& light_n);

/// Image pairs used by the ratio residuals.
inline constexpr std::array<std::array<int, 2>, 3> kRatioPairs{{{0, 1}, {1, 2}, {0, 2}}};

/// r_MN = I_M R_N - I_N R_M for (M, N) in kRatioPairs.
Eigen::Vector3d blinn_phong_residuals(const PixelModel& pm, const Intensities& intensities, double nu_x, double nu_y,
                                      Eigen::Matrix<double, 3, 2>* jacobian = nullptr);

Eigen::Vector3d blinn_phong_residuals(double nu_x, double nu_y, const ImagePoint& pt, const Intensities& intensities,
                                      const Lights& lights, const Material& m, const CameraIntrinsics& intr);

struct SolveStats {
    std::size_t input_masked = 0;
    std::size_t unsolvable = 0;
    std::size_t not_converged = 0;
    std::size_t solved = 0;
};

struct PerspectiveSolveResult {
    GradientField gradient;  ///< log-depth
    SolveStats stats;
};

/// Per-pixel Levenberg-Marquardt on the ratio residuals, started from the
/// Lambertian closed form ((0, 0) where it is singular).
PerspectiveSolveResult blinn_phong_pps_solve(const Images& images, const Lights& lights, const Material& m,
                                             const CameraIntrinsics& intr, const LMConfig& lm = {});

/// Single-pixel solve used by blinn_phong_pps_solve.
LMResult blinn_phong_pps_pixel(const PixelModel& pm, const Intensities& intensities, const Eigen::Vector2d& start,
                               const LMConfig& lm);

struct OrthographicSolveResult {
    NormalField normals;
    SolveStats stats;
};

/// Per-pixel Levenberg-Marquardt over (n1, n2), n3 = +sqrt(1 - n1^2 - n2^2),
/// on I_k minus the orthographic Blinn-Phong intensities.
OrthographicSolveResult blinn_phong_ortho_solve(const Images& images, const Lights& lights, const Material& m,
                                                const LMConfig& lm = {});

} // namespace psbp
