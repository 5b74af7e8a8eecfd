#include "occu/damage.hpp"

#include <algorithm>
#include <cmath>

#include "occu/error.hpp"

namespace occu {

Rect random_rect(int width, int height, double area_fraction, std::mt19937_64& rng) {
  if (!(area_fraction > 0.0 && area_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "hole area fraction must lie in (0, 1)");
  }
  const double area = area_fraction * static_cast<double>(width) * static_cast<double>(height);
  const double aspect = std::exp2(2.0 * unit_uniform(rng) - 1.0);
  int rw = static_cast<int>(std::lround(std::sqrt(area * aspect)));
  rw = std::clamp(rw, 1, width);
  int rh = static_cast<int>(std::lround(area / rw));
  rh = std::clamp(rh, 1, height);
  if (rw == width && rh == height) {
    if (width > 1) --rw; else --rh;
  }
  Rect r;
  r.width = rw;
  r.height = rh;
  r.x = uniform_int(rng, 0, width - r.width);
  r.y = uniform_int(rng, 0, height - r.height);
  return r;
}

MaskImage rect_mask(int width, int height, const Rect& hole) {
  MaskImage m(width, height, true);
  for (int y = std::max(hole.y, 0); y < std::min(hole.y + hole.height, height); ++y) {
    for (int x = std::max(hole.x, 0); x < std::min(hole.x + hole.width, width); ++x) {
      m.set(x, y, false);
    }
  }
  return m;
}

ImageBuffer occlude(const ImageBuffer& img, const Rect& hole, std::mt19937_64& rng) {
  ImageBuffer out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!hole.contains(x, y)) continue;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>(rng() >> 56);
      }
    }
  }
  return out;
}

}  // namespace occu
