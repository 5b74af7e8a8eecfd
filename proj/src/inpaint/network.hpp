#pragma once

// Traced forward pass and reverse-mode gradients for PConvModel. Internal to
// the inpaint library; shared by inference and toy training.

#include <vector>

#include "occu/feature_map.hpp"
#include "occu/pconv.hpp"

namespace occu::detail {

struct LayerTrace {
  FeatureMap input;           // X * M as consumed by the layer
  MaskImage in_mask;
  std::vector<double> scale;  // per output pixel, 0 where the window is empty
  FeatureMap pre;             // before activation
  FeatureMap post;
  MaskImage out_mask;
};

struct NetworkTrace {
  FeatureMap input;  // model input with holes zeroed
  std::vector<LayerTrace> encoder;
  std::vector<LayerTrace> decoder;
};

/// One partial convolution plus activation, recording what backward needs.
void pconv_layer_forward(const PConvLayer& layer, const FeatureMap& x, const MaskImage& m,
                         LayerTrace& trace);

/// Returns the gradient w.r.t. the layer input and accumulates parameter
/// gradients into `grad` (same shape as `layer`).
FeatureMap pconv_layer_backward(const PConvLayer& layer, const LayerTrace& trace,
                                const FeatureMap& d_post, PConvLayer& grad);

/// Runs the whole model; the output is trace.decoder.back().post (or the
/// last encoder layer when the decoder is empty).
const LayerTrace& model_forward(const PConvModel& model, const FeatureMap& input,
                                const MaskImage& mask, NetworkTrace& trace);

/// Accumulates parameter gradients for the output gradient `d_output`.
void model_backward(const PConvModel& model, const NetworkTrace& trace,
                    const FeatureMap& d_output, PConvModel& grad);

/// Copy of `model` with every weight and bias set to zero.
PConvModel zero_like(const PConvModel& model);

}  // namespace occu::detail
