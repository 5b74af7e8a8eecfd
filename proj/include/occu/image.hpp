#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace occu {

/// Round half away from zero, then clamp into [0, 255].
inline std::uint8_t saturate_u8(double v) {
  const double r = std::round(v);
  if (!(r > 0.0)) return 0;  // also maps NaN to 0
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

/// Dense 8-bit raster, row-major, channel-interleaved. Holds 1 (gray) or 3
/// (RGB) channels.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  /// Zero-filled image. Throws kInvalidArgument on bad dimensions.
  ImageBuffer(int width, int height, int channels);
  /// Adopts `data`; its length must equal width * height * channels.
  ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c = 0) noexcept {
    return data_[index(x, y, c)];
  }
  std::uint8_t at(int x, int y, int c = 0) const noexcept {
    return data_[index(x, y, c)];
  }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  const std::vector<std::uint8_t>& samples() const noexcept { return data_; }

  bool operator==(const ImageBuffer&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel validity map for inpainting: true = known pixel, false = hole.
class MaskImage {
 public:
  MaskImage() = default;
  MaskImage(int width, int height, bool valid = true);
  MaskImage(int width, int height, std::vector<std::uint8_t> valid);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return valid_.size(); }

  bool valid(int x, int y) const noexcept {
    return valid_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                  static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool v) noexcept {
    valid_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x)] = v ? 1 : 0;
  }
  /// One byte per pixel, 0 or 1.
  std::span<const std::uint8_t> bits() const noexcept { return valid_; }

  std::size_t valid_count() const noexcept;
  bool all_valid() const noexcept { return valid_count() == valid_.size(); }

  /// Mask file convention: sample >= 128 is valid, < 128 is a hole. Colour
  /// images are reduced to grayscale first.
  static MaskImage from_image(const ImageBuffer& img);
  /// Valid = 255, hole = 0, single channel.
  ImageBuffer to_image() const;

  bool operator==(const MaskImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> valid_;
};

/// Valid-pixel fraction in [0, 1].
double mask_coverage(const MaskImage& mask);

struct YCbCrBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> cb;
  std::vector<std::uint8_t> cr;

  bool operator==(const YCbCrBuffer&) const = default;
};

/// Gray = round(0.299 R + 0.587 G + 0.114 B); 1-channel input is copied.
ImageBuffer to_grayscale(const ImageBuffer& img);
/// Replicates a gray channel into RGB; 3-channel input is copied.
ImageBuffer to_rgb(const ImageBuffer& img);

// Full-range ITU-R BT.601.
YCbCrBuffer rgb_to_ycbcr(const ImageBuffer& rgb);
ImageBuffer ycbcr_to_rgb(const YCbCrBuffer& buf);

}  // namespace occu
