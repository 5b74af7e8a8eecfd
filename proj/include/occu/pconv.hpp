#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "occu/feature_map.hpp"
#include "occu/image.hpp"

namespace occu {

enum class Activation : std::uint32_t { kNone = 0, kRelu = 1, kLeakyRelu = 2 };

inline constexpr double kLeakySlope = 0.2;

double activate(Activation act, double v) noexcept;
/// Derivative evaluated at the pre-activation value.
double activate_grad(Activation act, double pre) noexcept;

/// Partial-convolution layer. Weights are laid out [out][in][ky][kx].
/// Padding is kernel / 2 on every side and padded positions count as holes.
struct PConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  Activation activation = Activation::kNone;
  std::vector<double> weights;
  std::vector<double> bias;

  std::size_t weight_index(int o, int i, int ky, int kx) const noexcept {
    return ((static_cast<std::size_t>(o) * static_cast<std::size_t>(in_channels) +
             static_cast<std::size_t>(i)) *
                static_cast<std::size_t>(kernel) +
            static_cast<std::size_t>(ky)) *
               static_cast<std::size_t>(kernel) +
           static_cast<std::size_t>(kx);
  }
  int out_extent(int in_extent) const noexcept { return (in_extent - 1) / stride + 1; }
  /// Throws kInvalidArgument on an odd-sized kernel violation, non-positive
  /// counts, mismatched array lengths, or non-finite parameters.
  void validate() const;

  bool operator==(const PConvLayer&) const = default;
};

/// A layer with zero weights and bias, sized for the given shape.
PConvLayer make_layer(int in_channels, int out_channels, int kernel, int stride,
                      Activation activation);

struct PConvResult {
  FeatureMap output;
  MaskImage mask;
};

/// out(o) = W^T (X * M) * (k*k / valid(o)) + b where the window has at least
/// one valid pixel; otherwise out(o) = 0 and the updated mask is a hole.
/// Activation is not applied here.
PConvResult pconv_forward(const PConvLayer& layer, const FeatureMap& x, const MaskImage& m);

/// Encoder-decoder (U-Net style) stack of partial convolutions. Decoder
/// layer j upsamples (nearest neighbour, by the stride of encoder layer
/// n-1-j), concatenates the matching encoder activation, and applies a
/// stride-1 partial convolution. An empty decoder is allowed when the
/// encoder preserves the spatial size.
struct PConvModel {
  int image_channels = 3;
  std::vector<PConvLayer> encoder;
  std::vector<PConvLayer> decoder;

  /// Throws kShapeMismatch when the topology cannot produce an
  /// image_channels output at input resolution.
  void validate() const;
  std::size_t parameter_count() const noexcept;

  bool operator==(const PConvModel&) const = default;
};

/// Three stride-2 encoder layers (16/32/64 channels, kernel 3, ReLU) with a
/// mirrored leaky-ReLU decoder and a linear output layer. Weights are
/// uniform in +-sqrt(1 / fan_in) from a seeded generator; biases start at 0.
PConvModel default_model(int image_channels, std::uint64_t seed);

/// Fills every layer's weights from the seeded generator as above.
void initialize_weights(PConvModel& model, std::uint64_t seed);

/// Runs the network on a [0, 1] image with its mask and returns the final
/// activation (image_channels planes at input size) and its mask.
PConvResult pconv_model_forward(const PConvModel& model, const FeatureMap& input,
                                const MaskImage& mask);

/// Versioned little-endian binary container; see docs/formats.md.
std::vector<std::uint8_t> serialize_model(const PConvModel& model);
PConvModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const PConvModel& model);
PConvModel load_model(const std::filesystem::path& path);

/// Image samples scaled into [0, 1], hole pixels zeroed.
FeatureMap image_to_features(const ImageBuffer& img, const MaskImage& mask);

}  // namespace occu
