#include "occu/image.hpp"

#include <algorithm>
#include <string>

#include "occu/error.hpp"

namespace occu {
namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "image dimensions must be positive, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "channel count must be 1 or 3, got " + std::to_string(channels));
  }
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), 0);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<std::uint8_t> data)
    : ImageBuffer(width, height, channels) {
  if (data.size() != data_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample count " + std::to_string(data.size()) + " does not match " +
                    std::to_string(data_.size()));
  }
  data_ = std::move(data);
}

MaskImage::MaskImage(int width, int height, bool valid)
    : width_(width), height_(height) {
  check_dims(width, height);
  valid_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                valid ? 1 : 0);
}

MaskImage::MaskImage(int width, int height, std::vector<std::uint8_t> valid)
    : MaskImage(width, height) {
  if (valid.size() != valid_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "mask length does not match dimensions");
  }
  for (auto& v : valid) v = v ? 1 : 0;
  valid_ = std::move(valid);
}

std::size_t MaskImage::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), 1));
}

MaskImage MaskImage::from_image(const ImageBuffer& img) {
  const ImageBuffer gray = to_grayscale(img);
  std::vector<std::uint8_t> valid(gray.pixel_count());
  std::transform(gray.data().begin(), gray.data().end(), valid.begin(),
                 [](std::uint8_t v) { return v >= 128 ? 1 : 0; });
  return MaskImage(gray.width(), gray.height(), std::move(valid));
}

ImageBuffer MaskImage::to_image() const {
  ImageBuffer out(width_, height_, 1);
  std::transform(valid_.begin(), valid_.end(), out.data().begin(),
                 [](std::uint8_t v) { return v ? std::uint8_t{255} : std::uint8_t{0}; });
  return out;
}

double mask_coverage(const MaskImage& mask) {
  if (mask.pixel_count() == 0) return 0.0;
  return static_cast<double>(mask.valid_count()) /
         static_cast<double>(mask.pixel_count());
}

}  // namespace occu
