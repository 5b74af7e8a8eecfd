#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "occu/image.hpp"
#include "occu/pconv.hpp"

namespace occu {

enum class InpaintEngine { kPconv, kDiffusion };

std::string_view to_string(InpaintEngine engine);
/// Accepts "pconv" or "diffusion"; throws kInvalidArgument otherwise.
InpaintEngine parse_engine(std::string_view name);

struct InpaintRequest {
  ImageBuffer image;
  MaskImage mask;
  InpaintEngine engine = InpaintEngine::kDiffusion;
  int diffusion_iters = 2000;
  double diffusion_tol = 0.05;  // mean absolute change, gray levels

  /// Throws kShapeMismatch on differing dimensions and kEmptyMask when no
  /// pixel is valid.
  void validate() const;
};

/// Network output on hole pixels, input copied verbatim on valid pixels.
/// Hole pixels the network cannot reach (still masked at the output) come
/// out as 0.
ImageBuffer pconv_inpaint(const InpaintRequest& req, const PConvModel& model);

struct DiffusionTrace {
  int iterations = 0;
  /// Mean absolute change of the hole samples per sweep.
  std::vector<double> mean_change;
};

/// Jacobi iteration of the 4-neighbour mean over hole pixels, with valid
/// pixels as fixed boundary values and mirrored (zero-flux) image borders.
/// Holes start at the per-channel mean of the valid pixels.
ImageBuffer diffusion_inpaint(const InpaintRequest& req, DiffusionTrace* trace = nullptr);

/// Dispatches on req.engine. The pconv engine needs a model.
ImageBuffer inpaint(const InpaintRequest& req, const PConvModel* model);

}  // namespace occu
