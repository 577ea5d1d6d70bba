#pragma once

#include <filesystem>
#include <string>

#include "psbp/core.hpp"

namespace psbp::io {

/// Binary PGM (P5). 8-bit when maxval < 256, otherwise 16-bit big-endian.
/// Intensities map to [0, full_scale]; values above full scale are clipped.
void write_pgm(const std::filesystem::path& path, const Image& image, double full_scale, int maxval = 65535);

/// Reads a P5 file; sample / maxval * full_scale becomes the linear intensity.
/// A "# origin <name>" comment restores Image::origin.
Image read_pgm(const std::filesystem::path& path, double full_scale = 1.0);

/// Writes 0/255 8-bit PGM of a mask.
void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);

/// Single-channel little-endian PFM ("Pf", scale -1). Rows are stored bottom
/// to top. Masked pixels are written as NaN.
void write_pfm(const std::filesystem::path& path, const RealGrid& grid, const Mask& mask);
void write_pfm(const std::filesystem::path& path, const RealGrid& grid);

struct PfmChannel {
    RealGrid values;
    Mask mask;  ///< pixels whose sample is finite
};

PfmChannel read_pfm(const std::filesystem::path& path);

/// Three-channel PFM ("PF") holding unit normals; masked pixels are NaN.
void write_normals_pfm(const std::filesystem::path& path, const NormalField& normals);
NormalField read_normals_pfm(const std::filesystem::path& path);

void write_depth(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth(const std::filesystem::path& path);

/// Gradient field as two single-channel PFM files.
void write_gradient(const std::filesystem::path& gx_path, const std::filesystem::path& gy_path,
                    const GradientField& g);
GradientField read_gradient(const std::filesystem::path& gx_path, const std::filesystem::path& gy_path,
                            GradientKind kind);

} // namespace psbp::io
