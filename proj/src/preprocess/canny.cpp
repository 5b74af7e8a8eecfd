#include "occu/canny.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "occu/error.hpp"
#include "occu/gaussian.hpp"

namespace occu {
namespace {

struct Offset {
  int dx;
  int dy;
};

// Neighbour pairs along each quantized direction: {behind, ahead}. A pixel
// survives if it is strictly above the one behind and not below the one
// ahead, so plateaus two pixels wide thin to a single line.
constexpr std::array<std::array<Offset, 2>, 4> kNeighbours{{
    {{{-1, 0}, {1, 0}}},
    {{{-1, -1}, {1, 1}}},
    {{{0, -1}, {0, 1}}},
    {{{1, -1}, {-1, 1}}},
}};

}  // namespace

void CannyParams::validate() const {
  if (!(std::isfinite(sigma) && sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "Canny sigma must be positive");
  }
  if (!(t_low > 0.0 && t_low <= t_high)) {
    throw Error(ErrorCode::kInvalidParams,
                "Canny thresholds must satisfy 0 < t_low <= t_high (got " +
                    std::to_string(t_low) + ", " + std::to_string(t_high) + ")");
  }
}

std::size_t EdgeMap::count() const noexcept {
  return static_cast<std::size_t>(std::count(edge.begin(), edge.end(), 1));
}

ImageBuffer EdgeMap::to_image() const {
  ImageBuffer out(width, height, 1);
  std::transform(edge.begin(), edge.end(), out.data().begin(),
                 [](std::uint8_t e) { return e ? std::uint8_t{255} : std::uint8_t{0}; });
  return out;
}

int quantize_direction(double radians) noexcept {
  double deg = radians * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  if (deg < 22.5 || deg >= 157.5) return 0;
  if (deg < 67.5) return 1;
  if (deg < 112.5) return 2;
  return 3;
}

CannyStages canny_stages(const ImageBuffer& img, const CannyParams& params) {
  params.validate();
  CannyStages st;
  st.smoothed = gaussian_blur(to_grayscale(img), gaussian_kernel(params.sigma));
  st.gradient = sobel_gradient(st.smoothed);

  const GradientField& g = st.gradient;
  const int w = g.width;
  const int h = g.height;
  const auto mag_at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return g.magnitude[g.index(x, y)];
  };

  st.suppressed.assign(g.magnitude.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = g.index(x, y);
      const double m = g.magnitude[i];
      const auto& nb = kNeighbours[static_cast<std::size_t>(quantize_direction(g.direction[i]))];
      if (m > mag_at(x + nb[0].dx, y + nb[0].dy) && m >= mag_at(x + nb[1].dx, y + nb[1].dy)) {
        st.suppressed[i] = 1;
      }
    }
  }

  st.edges = EdgeMap{w, h, std::vector<std::uint8_t>(g.magnitude.size(), 0)};
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < g.magnitude.size(); ++i) {
    if (st.suppressed[i] && g.magnitude[i] >= params.t_high) {
      st.edges.edge[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = g.index(nx, ny);
        if (!st.edges.edge[j] && st.suppressed[j] && g.magnitude[j] >= params.t_low) {
          st.edges.edge[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return st;
}

EdgeMap canny(const ImageBuffer& img, const CannyParams& params) {
  return canny_stages(img, params).edges;
}

}  // namespace occu
