#include "occu/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "occu/error.hpp"

namespace occu {

GradientField sobel_gradient(const ImageBuffer& img) {
  if (img.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "sobel_gradient requires a 1-channel image");
  }
  const int w = img.width();
  const int h = img.height();
  const std::size_t n = img.pixel_count();
  GradientField g{w, h, std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n), std::vector<double>(n)};

  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      const int tl = img.at(xm, ym), tc = img.at(x, ym), tr = img.at(xp, ym);
      const int ml = img.at(xm, y), mr = img.at(xp, y);
      const int bl = img.at(xm, yp), bc = img.at(x, yp), br = img.at(xp, yp);
      // Integer arithmetic keeps the zero gradient free of signed zeros.
      const int gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
      const int gy = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
      const std::size_t i = g.index(x, y);
      g.fx[i] = gx;
      g.fy[i] = gy;
      g.magnitude[i] = std::abs(gx) + std::abs(gy);
      g.direction[i] = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
    }
  }
  return g;
}

}  // namespace occu
