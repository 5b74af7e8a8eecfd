#pragma once

#include <cstdint>
#include <vector>

#include "occu/gradient.hpp"
#include "occu/image.hpp"

namespace occu {

struct CannyParams {
  double sigma = 1.4;
  double t_low = 80.0;
  double t_high = 140.0;

  /// Throws kInvalidParams unless sigma > 0 and 0 < t_low <= t_high.
  void validate() const;
};

struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> edge;  // 1 = edge pixel

  bool at(int x, int y) const noexcept {
    return edge[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)] != 0;
  }
  std::size_t count() const noexcept;
  /// Edge pixels white (255) on black.
  ImageBuffer to_image() const;

  bool operator==(const EdgeMap&) const = default;
};

/// Intermediate products of one detector run, kept for callers that need
/// more than the final map (edge-orientation features, tests).
struct CannyStages {
  ImageBuffer smoothed;
  GradientField gradient;
  std::vector<std::uint8_t> suppressed;  // 1 = survived non-maximum suppression
  EdgeMap edges;
};

/// Gradient direction quantized to 0, 45, 90 or 135 degrees (returned as
/// 0..3). Angles are folded into [0, 180) first.
int quantize_direction(double radians) noexcept;

/// Gaussian smoothing, Sobel gradient, non-maximum suppression along the
/// quantized direction, and 8-connected hysteresis. Colour input is reduced
/// to grayscale first.
CannyStages canny_stages(const ImageBuffer& img, const CannyParams& params = {});
EdgeMap canny(const ImageBuffer& img, const CannyParams& params = {});

}  // namespace occu
