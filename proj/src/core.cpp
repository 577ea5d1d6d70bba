#include "psbp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psbp {

Mask full_mask(int width, int height)
{
    return Mask(width, height, 1);
}

std::size_t count_valid(const Mask& mask)
{
    return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

Mask mask_and(const Mask& a, const Mask& b)
{
    if (!a.same_shape(b)) {
        throw ValidationError("mask dimension mismatch");
    }
    Mask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = (a[i] && b[i]) ? 1 : 0;
    }
    return out;
}

void Image::validate() const
{
    for (double v : data.data()) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("image intensities must be finite and non-negative");
        }
    }
    if (!(full_scale > 0.0)) {
        throw ValidationError("image full_scale must be positive");
    }
}

void LightSource::validate() const
{
    if (!direction.allFinite() || direction.norm() == 0.0) {
        throw ValidationError("light direction must be finite and nonzero");
    }
    if (!(direction.z() > 0.0)) {
        throw ValidationError("light direction must have positive z component");
    }
    if (!(diffuse_intensity >= 0.0) || !(specular_intensity >= 0.0)) {
        throw ValidationError("light intensities must be non-negative");
    }
}

void Material::validate() const
{
    constexpr double tolerance = 1e-9;
    if (!(kd >= 0.0 && kd <= 1.0)) {
        throw ValidationError("material kd must lie in [0, 1]");
    }
    if (!(ks >= 0.0 && ks <= 1.0)) {
        throw ValidationError("material ks must lie in [0, 1]");
    }
    if (!(shininess >= 1.0)) {
        throw ValidationError("material shininess must be >= 1");
    }
    if (kd + ks > 1.0 + tolerance) {
        throw ValidationError("material kd + ks must not exceed 1");
    }
}

void CameraIntrinsics::validate() const
{
    if (!(focal > 0.0) || !std::isfinite(focal)) {
        throw ValidationError("camera focal length must be positive");
    }
    if (!(pitch_x > 0.0) || !(pitch_y > 0.0)) {
        throw ValidationError("camera pixel pitch must be positive");
    }
    if (!std::isfinite(principal_x) || !std::isfinite(principal_y)) {
        throw ValidationError("camera principal point must be finite");
    }
}

void GradientField::normalize_masked()
{
    if (!gx.same_shape(gy) || !gx.same_shape(mask)) {
        throw ValidationError("gradient field components have mismatched dimensions");
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) {
            gx[i] = 0.0;
            gy[i] = 0.0;
        }
    }
}

void DepthMap::validate() const
{
    if (!z.same_shape(mask)) {
        throw ValidationError("depth map and mask have mismatched dimensions");
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (mask[i] && !(std::isfinite(z[i]) && z[i] > 0.0)) {
            throw ValidationError("unmasked depth values must be finite and positive");
        }
    }
}

double mse(const RealGrid& a, const RealGrid& b, const Mask& mask)
{
    if (!a.same_shape(b) || !a.same_shape(mask)) {
        throw ValidationError("mse: dimension mismatch");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (mask[i]) {
            const double d = a[i] - b[i];
            sum += d * d;
            ++n;
        }
    }
    if (n == 0) {
        throw ValidationError("mse: empty mask");
    }
    return sum / static_cast<double>(n);
}

DepthMap normalize_unit_range(const DepthMap& d)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < d.z.size(); ++i) {
        if (d.mask[i]) {
            lo = std::min(lo, d.z[i]);
            hi = std::max(hi, d.z[i]);
        }
    }
    if (!(hi > lo)) {
        throw ValidationError("normalize_unit_range: zero range");
    }
    DepthMap out = d;
    const double scale = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < out.z.size(); ++i) {
        out.z[i] = d.mask[i] ? (d.z[i] - lo) * scale : 0.0;
    }
    return out;
}

std::string to_string(Origin origin)
{
    return origin == Origin::Corner ? "corner" : "principal-point";
}

Origin origin_from_string(const std::string& s)
{
    if (s == "corner") {
        return Origin::Corner;
    }
    if (s == "principal-point") {
        return Origin::PrincipalPoint;
    }
    throw ValidationError("unknown image origin: " + s);
}

std::string to_string(GradientKind kind)
{
    return kind == GradientKind::LogDepth ? "log-depth" : "depth";
}

} // namespace psbp
