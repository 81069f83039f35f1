#pragma once

#include <filesystem>

#include "formbench/mask_ops.hpp"

namespace formbench {

/// Reads an 8-bit PNG. Paletted and gray images load as one channel of raw
/// indices/values; RGB loads as three channels. Alpha is dropped.
Raster read_png(const std::filesystem::path& path);

/// Reads a PNG as luminance. RGB input is converted with Rec. 601 weights.
GrayImage read_gray_png(const std::filesystem::path& path);

void write_gray_png(const GrayImage& image, const std::filesystem::path& path);
void write_rgb_png(const Raster& raster, const std::filesystem::path& path);

}  // namespace formbench
