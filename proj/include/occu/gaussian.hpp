#pragma once

#include <vector>

#include "occu/image.hpp"

namespace occu {

/// Sampled, normalized 2D Gaussian. `weights` is row-major over
/// (2 * radius + 1)^2 offsets, dy outer and dx inner, both from -radius.
struct GaussianKernel {
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  int radius = 1;
  std::vector<double> weights;

  int size() const noexcept { return 2 * radius + 1; }
  double at(int dx, int dy) const noexcept {
    return weights[static_cast<std::size_t>((dy + radius) * size() + (dx + radius))];
  }
};

/// Zero-mean bivariate Gaussian density with independent axes.
double gaussian_density(double x, double y, double sigma_x, double sigma_y);

/// radius = ceil(3 * max(sigma_x, sigma_y)); throws kInvalidSigma for
/// non-positive or non-finite sigmas.
GaussianKernel gaussian_kernel(double sigma_x, double sigma_y);
inline GaussianKernel gaussian_kernel(double sigma) { return gaussian_kernel(sigma, sigma); }

/// Per-channel 2D convolution with replicate-edge borders; results rounded
/// half away from zero and clamped.
ImageBuffer gaussian_blur(const ImageBuffer& img, const GaussianKernel& kernel);

}  // namespace occu
