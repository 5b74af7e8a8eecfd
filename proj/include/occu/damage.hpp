#pragma once

#include <cstdint>
#include <random>

#include "occu/image.hpp"

namespace occu {

/// Uniform double in [0, 1) from the top 53 bits; stable across standard
/// library implementations, unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [lo, hi].
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(int px, int py) const noexcept {
    return px >= x && py >= y && px < x + width && py < y + height;
  }
};

/// Axis-aligned rectangle of roughly `area_fraction` of the image (aspect
/// drawn in [1/2, 2]), placed uniformly. Never covers the whole image.
Rect random_rect(int width, int height, double area_fraction, std::mt19937_64& rng);

/// Valid everywhere except inside `hole`.
MaskImage rect_mask(int width, int height, const Rect& hole);

/// Paints `hole` with seeded uniform noise, standing in for an occluding
/// object. Returns the damaged copy.
ImageBuffer occlude(const ImageBuffer& img, const Rect& hole, std::mt19937_64& rng);

}  // namespace occu
