#include <string>

#include "occu/error.hpp"
#include "occu/image.hpp"

namespace occu {
namespace {

constexpr double kWr = 0.299;
constexpr double kWg = 0.587;
constexpr double kWb = 0.114;

double luma(double r, double g, double b) { return kWr * r + kWg * g + kWb * b; }

void require_rgb(const ImageBuffer& img, const char* op) {
  if (img.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(op) + " requires a 3-channel image");
  }
}

}  // namespace

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    dst[i] = saturate_u8(luma(src[3 * i], src[3 * i + 1], src[3 * i + 2]));
  }
  return out;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer out(img.width(), img.height(), 3);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return out;
}

YCbCrBuffer rgb_to_ycbcr(const ImageBuffer& rgb) {
  require_rgb(rgb, "rgb_to_ycbcr");
  const std::size_t n = rgb.pixel_count();
  YCbCrBuffer out{rgb.width(), rgb.height(), std::vector<std::uint8_t>(n),
                  std::vector<std::uint8_t>(n), std::vector<std::uint8_t>(n)};
  const auto src = rgb.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = src[3 * i];
    const double g = src[3 * i + 1];
    const double b = src[3 * i + 2];
    out.y[i] = saturate_u8(luma(r, g, b));
    out.cb[i] = saturate_u8(128.0 + (b - luma(r, g, b)) * (0.5 / (1.0 - kWb)));
    out.cr[i] = saturate_u8(128.0 + (r - luma(r, g, b)) * (0.5 / (1.0 - kWr)));
  }
  return out;
}

ImageBuffer ycbcr_to_rgb(const YCbCrBuffer& buf) {
  const std::size_t n =
      static_cast<std::size_t>(buf.width) * static_cast<std::size_t>(buf.height);
  if (buf.y.size() != n || buf.cb.size() != n || buf.cr.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "YCbCr plane lengths do not match dimensions");
  }
  ImageBuffer out(buf.width, buf.height, 3);
  auto dst = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double y = buf.y[i];
    const double cb = buf.cb[i] - 128.0;
    const double cr = buf.cr[i] - 128.0;
    const double r = y + 2.0 * (1.0 - kWr) * cr;
    const double b = y + 2.0 * (1.0 - kWb) * cb;
    const double g = (y - kWr * r - kWb * b) / kWg;
    dst[3 * i] = saturate_u8(r);
    dst[3 * i + 1] = saturate_u8(g);
    dst[3 * i + 2] = saturate_u8(b);
  }
  return out;
}

}  // namespace occu
