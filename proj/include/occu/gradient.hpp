#pragma once

#include <vector>

#include "occu/image.hpp"

namespace occu {

/// Sobel derivatives with the L1 magnitude |fx| + |fy| and direction
/// atan2(fy, fx). x grows rightwards and y downwards; all planes row-major.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> fx;
  std::vector<double> fy;
  std::vector<double> magnitude;
  std::vector<double> direction;

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
};

/// Standard 3x3 Sobel masks with replicate-edge borders. Requires a
/// single-channel image.
GradientField sobel_gradient(const ImageBuffer& img);

}  // namespace occu
