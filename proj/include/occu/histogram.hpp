#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "occu/image.hpp"

namespace occu {

/// Linear remap of the observed [min, max] onto [0, 255]. A constant image
/// is returned unchanged.
ImageBuffer histogram_stretch(const ImageBuffer& gray);

/// Lookup table v -> round(255 * CDF(v)) built from the plane's histogram.
std::array<std::uint8_t, 256> equalization_lut(std::span<const std::uint8_t> plane);

/// Equalizes the Y plane only; Cb and Cr are copied through untouched.
YCbCrBuffer equalize_luma(const YCbCrBuffer& buf);

/// Luminance-only histogram equalization of an RGB image (via YCbCr), which
/// raises contrast without shifting hue.
ImageBuffer equalize_color(const ImageBuffer& rgb);

}  // namespace occu
