#include "occu/histogram.hpp"

#include <algorithm>

#include "occu/error.hpp"

namespace occu {

ImageBuffer histogram_stretch(const ImageBuffer& gray) {
  if (gray.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "histogram_stretch requires a 1-channel image");
  }
  const auto [lo_it, hi_it] = std::minmax_element(gray.data().begin(), gray.data().end());
  const int lo = *lo_it;
  const int hi = *hi_it;
  if (lo == hi) return gray;

  std::array<std::uint8_t, 256> lut{};
  const double span = hi - lo;
  for (int v = lo; v <= hi; ++v) {
    lut[static_cast<std::size_t>(v)] = saturate_u8(static_cast<double>(v - lo) * 255.0 / span);
  }
  ImageBuffer out = gray;
  for (auto& s : out.data()) s = lut[s];
  return out;
}

std::array<std::uint8_t, 256> equalization_lut(std::span<const std::uint8_t> plane) {
  std::array<std::size_t, 256> hist{};
  for (auto v : plane) ++hist[v];
  std::array<std::uint8_t, 256> lut{};
  const double total = static_cast<double>(plane.size());
  std::size_t cumulative = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    cumulative += hist[v];
    lut[v] = total > 0 ? saturate_u8(255.0 * static_cast<double>(cumulative) / total) : 0;
  }
  return lut;
}

YCbCrBuffer equalize_luma(const YCbCrBuffer& buf) {
  YCbCrBuffer out = buf;
  const auto lut = equalization_lut(buf.y);
  for (auto& v : out.y) v = lut[v];
  return out;
}

ImageBuffer equalize_color(const ImageBuffer& rgb) {
  if (rgb.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "equalize_color requires a 3-channel image");
  }
  return ycbcr_to_rgb(equalize_luma(rgb_to_ycbcr(rgb)));
}

}  // namespace occu
