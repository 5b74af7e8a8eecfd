#include "occu/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "occu/error.hpp"

namespace occu {
namespace {

// Clamped source coordinate for every offset in [-radius, length + radius).
std::vector<int> replicate_table(int length, int radius) {
  std::vector<int> table(static_cast<std::size_t>(length + 2 * radius));
  for (int i = -radius; i < length + radius; ++i) {
    table[static_cast<std::size_t>(i + radius)] = std::clamp(i, 0, length - 1);
  }
  return table;
}

}  // namespace

double gaussian_density(double x, double y, double sigma_x, double sigma_y) {
  const double ex = (x * x) / (2.0 * sigma_x * sigma_x);
  const double ey = (y * y) / (2.0 * sigma_y * sigma_y);
  return std::exp(-(ex + ey)) / (2.0 * std::numbers::pi * sigma_x * sigma_y);
}

GaussianKernel gaussian_kernel(double sigma_x, double sigma_y) {
  if (!(std::isfinite(sigma_x) && std::isfinite(sigma_y) && sigma_x > 0.0 &&
        sigma_y > 0.0)) {
    throw Error(ErrorCode::kInvalidSigma,
                "Gaussian sigma must be positive and finite, got (" +
                    std::to_string(sigma_x) + ", " + std::to_string(sigma_y) + ")");
  }
  GaussianKernel k;
  k.sigma_x = sigma_x;
  k.sigma_y = sigma_y;
  k.radius = std::max(1, static_cast<int>(std::ceil(3.0 * std::max(sigma_x, sigma_y))));
  const int n = k.size();
  k.weights.resize(static_cast<std::size_t>(n * n));
  double total = 0.0;
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      const double w = gaussian_density(dx, dy, sigma_x, sigma_y);
      k.weights[static_cast<std::size_t>((dy + k.radius) * n + (dx + k.radius))] = w;
      total += w;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, const GaussianKernel& kernel) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  const int r = kernel.radius;
  const int n = kernel.size();
  const auto xs = replicate_table(w, r);
  const auto ys = replicate_table(h, r);
  const auto src = img.data();

  ImageBuffer out(w, h, ch);
  auto dst = out.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        const double* wrow = kernel.weights.data();
        for (int ky = 0; ky < n; ++ky, wrow += n) {
          const std::size_t row =
              static_cast<std::size_t>(ys[static_cast<std::size_t>(y + ky)]) *
              static_cast<std::size_t>(w);
          const int* xcol = xs.data() + x;
          for (int kx = 0; kx < n; ++kx) {
            acc += wrow[kx] *
                   src[(row + static_cast<std::size_t>(xcol[kx])) * static_cast<std::size_t>(ch) +
                       static_cast<std::size_t>(c)];
          }
        }
        dst[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
             static_cast<std::size_t>(x)) *
                static_cast<std::size_t>(ch) +
            static_cast<std::size_t>(c)] = saturate_u8(acc);
      }
    }
  }
  return out;
}

}  // namespace occu
