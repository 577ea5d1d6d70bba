#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace psbp {

using Vec3 = Eigen::Vector3d;

/// Raised for malformed inputs: bad dimensions, invalid parameters, bad config.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical procedure cannot produce a result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major 2-D grid. Index (x, y) with x the column.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0) {
            throw ValidationError("grid dimensions must be non-negative");
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const
    {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Grid&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RealGrid = Grid<double>;
using Mask = Grid<std::uint8_t>;

Mask full_mask(int width, int height);
std::size_t count_valid(const Mask& mask);
Mask mask_and(const Mask& a, const Mask& b);

enum class Origin { Corner, PrincipalPoint };

/// Scalar linear-light intensities. `full_scale` is the sensor saturation level
/// (infinite for synthetic renders that were never quantized).
struct Image {
    RealGrid data;
    Origin origin = Origin::PrincipalPoint;
    double full_scale = 1.0;

    int width() const { return data.width(); }
    int height() const { return data.height(); }
    double operator()(int x, int y) const { return data(x, y); }

    /// Throws if any value is negative or non-finite.
    void validate() const;
};

/// Point light source at infinity. Direction magnitude is irrelevant to shading.
struct LightSource {
    Vec3 direction = Vec3(0, 0, 1);
    double diffuse_intensity = 1.0;
    double specular_intensity = 1.0;

    Vec3 unit() const { return direction.normalized(); }
    void validate() const;
};

struct Material {
    double kd = 1.0;
    double ks = 0.0;
    double shininess = 1.0;

    void validate() const;
};

/// Pinhole intrinsics. Pixel (i, j) maps to image-plane point
/// (pitch_x * (i - principal_x), pitch_y * (j - principal_y)); skew is zero.
struct CameraIntrinsics {
    double focal = 1.0;
    double pitch_x = 1.0;
    double pitch_y = 1.0;
    double principal_x = 0.0;
    double principal_y = 0.0;

    void validate() const;

    /// Same camera with the principal point moved to the pixel origin.
    CameraIntrinsics uncentered() const
    {
        CameraIntrinsics c = *this;
        c.principal_x = 0.0;
        c.principal_y = 0.0;
        return c;
    }
};

enum class GradientKind { LogDepth, Depth };

struct GradientField {
    GradientKind kind = GradientKind::LogDepth;
    RealGrid gx;
    RealGrid gy;
    Mask mask;

    GradientField() = default;
    GradientField(int width, int height, GradientKind k = GradientKind::LogDepth)
        : kind(k), gx(width, height), gy(width, height), mask(width, height, 1)
    {
    }

    int width() const { return gx.width(); }
    int height() const { return gx.height(); }

    /// Zeroes masked entries and checks dimensions.
    void normalize_masked();
};

struct DepthMap {
    RealGrid z;
    Mask mask;

    DepthMap() = default;
    DepthMap(int width, int height) : z(width, height), mask(width, height, 1) {}

    int width() const { return z.width(); }
    int height() const { return z.height(); }
    void validate() const;
};

struct NormalField {
    Grid<Vec3> n;
    Mask mask;

    NormalField() = default;
    NormalField(int width, int height) : n(width, height, Vec3(0, 0, 1)), mask(width, height, 1) {}

    int width() const { return n.width(); }
    int height() const { return n.height(); }
};

/// Mean of (a - b)^2 over pixels where mask is set.
double mse(const RealGrid& a, const RealGrid& b, const Mask& mask);

/// Affinely maps unmasked depths onto [0, 1].
DepthMap normalize_unit_range(const DepthMap& d);

std::string to_string(Origin origin);
Origin origin_from_string(const std::string& s);
std::string to_string(GradientKind kind);

} // namespace psbp
