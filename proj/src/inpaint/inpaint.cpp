#include "occu/inpaint.hpp"

#include <array>
#include <cmath>
#include <string>

#include "occu/error.hpp"

namespace occu {

std::string_view to_string(InpaintEngine engine) {
  return engine == InpaintEngine::kPconv ? "pconv" : "diffusion";
}

InpaintEngine parse_engine(std::string_view name) {
  if (name == "pconv") return InpaintEngine::kPconv;
  if (name == "diffusion") return InpaintEngine::kDiffusion;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown inpainting engine '" + std::string(name) + "' (pconv|diffusion)");
}

void InpaintRequest::validate() const {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw Error(ErrorCode::kShapeMismatch,
                "mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                    " but image is " + std::to_string(image.width()) + "x" +
                    std::to_string(image.height()));
  }
  if (mask.valid_count() == 0) {
    throw Error(ErrorCode::kEmptyMask, "mask has no valid pixels");
  }
  if (diffusion_iters < 0 || !(diffusion_tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "diffusion limits must be non-negative");
  }
}

ImageBuffer pconv_inpaint(const InpaintRequest& req, const PConvModel& model) {
  req.validate();
  if (req.image.channels() != model.image_channels) {
    throw Error(ErrorCode::kShapeMismatch, "model channel count differs from the image");
  }
  ImageBuffer out = req.image;
  if (req.mask.all_valid()) return out;

  const PConvResult net = pconv_model_forward(model, image_to_features(req.image, req.mask),
                                              req.mask);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (req.mask.valid(x, y)) continue;
      for (int c = 0; c < out.channels(); ++c) {
        out.at(x, y, c) = net.mask.valid(x, y) ? saturate_u8(255.0 * net.output.at(c, x, y)) : 0;
      }
    }
  }
  return out;
}

ImageBuffer diffusion_inpaint(const InpaintRequest& req, DiffusionTrace* trace) {
  req.validate();
  const int w = req.image.width();
  const int h = req.image.height();
  const int ch = req.image.channels();
  ImageBuffer out = req.image;
  if (trace) *trace = {};

  // Hole pixel list with each neighbour resolved to a pixel index; an
  // out-of-image neighbour resolves to the pixel itself.
  std::vector<std::size_t> holes;
  std::vector<std::array<std::size_t, 4>> neighbours;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (req.mask.valid(x, y)) continue;
      const auto at = [w](int xx, int yy) {
        return static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) +
               static_cast<std::size_t>(xx);
      };
      const std::size_t self = at(x, y);
      holes.push_back(self);
      neighbours.push_back({x > 0 ? at(x - 1, y) : self, x + 1 < w ? at(x + 1, y) : self,
                            y > 0 ? at(x, y - 1) : self, y + 1 < h ? at(x, y + 1) : self});
    }
  }
  if (holes.empty()) return out;

  const std::size_t n = out.pixel_count();
  std::vector<double> cur(n * static_cast<std::size_t>(ch));
  const auto src = req.image.data();
  for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = src[i];
  for (int c = 0; c < ch; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    const auto bits = req.mask.bits();
    for (std::size_t p = 0; p < n; ++p) {
      if (bits[p]) {
        sum += src[p * static_cast<std::size_t>(ch) + static_cast<std::size_t>(c)];
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    for (std::size_t p : holes) cur[p * static_cast<std::size_t>(ch) + static_cast<std::size_t>(c)] = mean;
  }

  std::vector<double> next(holes.size() * static_cast<std::size_t>(ch));
  const std::size_t stride = static_cast<std::size_t>(ch);
  const double samples = static_cast<double>(next.size());
  for (int it = 0; it < req.diffusion_iters; ++it) {
    for (std::size_t k = 0; k < holes.size(); ++k) {
      const auto& nb = neighbours[k];
      for (std::size_t c = 0; c < stride; ++c) {
        next[k * stride + c] = 0.25 * (cur[nb[0] * stride + c] + cur[nb[1] * stride + c] +
                                       cur[nb[2] * stride + c] + cur[nb[3] * stride + c]);
      }
    }
    double change = 0.0;
    for (std::size_t k = 0; k < holes.size(); ++k) {
      for (std::size_t c = 0; c < stride; ++c) {
        double& v = cur[holes[k] * stride + c];
        change += std::abs(next[k * stride + c] - v);
        v = next[k * stride + c];
      }
    }
    change /= samples;
    if (trace) {
      trace->iterations = it + 1;
      trace->mean_change.push_back(change);
    }
    if (change <= req.diffusion_tol) break;
  }

  auto dst = out.data();
  for (std::size_t p : holes) {
    for (std::size_t c = 0; c < stride; ++c) dst[p * stride + c] = saturate_u8(cur[p * stride + c]);
  }
  return out;
}

ImageBuffer inpaint(const InpaintRequest& req, const PConvModel* model) {
  if (req.engine == InpaintEngine::kDiffusion) return diffusion_inpaint(req);
  if (!model) throw Error(ErrorCode::kInvalidArgument, "the pconv engine needs a model");
  return pconv_inpaint(req, *model);
}

}  // namespace occu
