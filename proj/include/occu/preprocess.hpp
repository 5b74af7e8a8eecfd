#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "occu/canny.hpp"
#include "occu/image.hpp"

namespace occu {

enum class PreprocessMode { kColor, kGrayscale };

std::string_view to_string(PreprocessMode mode);

/// Sharpening: clamp(round(img + amount * (img - gaussian_blur(img, sigma)))).
/// The blurred copy is the 8-bit output of gaussian_blur. 1-channel only.
ImageBuffer unsharp_mask(const ImageBuffer& gray, double amount, double sigma);

/// Mean over pixels of (Cb - 128)^2 + (Cr - 128)^2; zero for 1-channel input.
double chroma_energy(const ImageBuffer& img);

/// Below this chroma energy a 3-channel image is routed down the grayscale path.
inline constexpr double kChromaThreshold = 1.0;

struct PreprocessReport {
  PreprocessMode mode = PreprocessMode::kGrayscale;
  std::vector<std::string> steps;
  ImageBuffer output;
  std::optional<EdgeMap> edges;
};

struct PreprocessOptions {
  double unsharp_amount = 1.0;
  double unsharp_sigma = 1.0;
  CannyParams canny;
};

/// Colour images: luminance equalization, then edges. Grayscale (or
/// near-achromatic) images: unsharp mask then histogram stretch, then edges.
PreprocessReport preprocess_auto(const ImageBuffer& img, const PreprocessOptions& opts = {});

/// Forces a path regardless of the image content. The colour path needs a
/// 3-channel image; the grayscale path converts as needed.
PreprocessReport preprocess_with_mode(const ImageBuffer& img, PreprocessMode mode,
                                      const PreprocessOptions& opts = {});

}  // namespace occu
