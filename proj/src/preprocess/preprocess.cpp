#include "occu/preprocess.hpp"

#include "occu/error.hpp"
#include "occu/gaussian.hpp"
#include "occu/histogram.hpp"

namespace occu {

std::string_view to_string(PreprocessMode mode) {
  return mode == PreprocessMode::kColor ? "color" : "grayscale";
}

ImageBuffer unsharp_mask(const ImageBuffer& gray, double amount, double sigma) {
  if (gray.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "unsharp_mask requires a 1-channel image");
  }
  if (!(amount >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "unsharp amount must be non-negative");
  }
  const ImageBuffer blurred = gaussian_blur(gray, gaussian_kernel(sigma));
  ImageBuffer out(gray.width(), gray.height(), 1);
  const auto src = gray.data();
  const auto low = blurred.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double v = src[i];
    dst[i] = saturate_u8(v + amount * (v - static_cast<double>(low[i])));
  }
  return out;
}

double chroma_energy(const ImageBuffer& img) {
  if (img.channels() != 3) return 0.0;
  const YCbCrBuffer ycc = rgb_to_ycbcr(img);
  double acc = 0.0;
  for (std::size_t i = 0; i < ycc.cb.size(); ++i) {
    const double cb = ycc.cb[i] - 128.0;
    const double cr = ycc.cr[i] - 128.0;
    acc += cb * cb + cr * cr;
  }
  return acc / static_cast<double>(ycc.cb.size());
}

PreprocessReport preprocess_with_mode(const ImageBuffer& img, PreprocessMode mode,
                                      const PreprocessOptions& opts) {
  PreprocessReport report;
  report.mode = mode;
  if (mode == PreprocessMode::kColor) {
    if (img.channels() != 3) {
      throw Error(ErrorCode::kInvalidArgument, "colour preprocessing requires a 3-channel image");
    }
    report.output = equalize_color(img);
    report.steps.emplace_back("equalize_color");
  } else {
    ImageBuffer gray = img;
    if (img.channels() == 3) {
      gray = to_grayscale(img);
      report.steps.emplace_back("to_grayscale");
    }
    gray = unsharp_mask(gray, opts.unsharp_amount, opts.unsharp_sigma);
    report.steps.emplace_back("unsharp_mask");
    report.output = histogram_stretch(gray);
    report.steps.emplace_back("histogram_stretch");
  }
  report.edges = canny(report.output, opts.canny);
  report.steps.emplace_back("canny");
  return report;
}

PreprocessReport preprocess_auto(const ImageBuffer& img, const PreprocessOptions& opts) {
  const bool colour = img.channels() == 3 && chroma_energy(img) >= kChromaThreshold;
  return preprocess_with_mode(img, colour ? PreprocessMode::kColor : PreprocessMode::kGrayscale,
                              opts);
}

}  // namespace occu
