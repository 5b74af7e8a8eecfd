#pragma once

#include <cstdint>
#include <vector>

#include "occu/feature_map.hpp"
#include "occu/image.hpp"
#include "occu/pconv.hpp"

namespace occu {

/// One supervised example: the masked input, its mask, and the clean target
/// (all in [0, 1]).
struct TrainingSample {
  FeatureMap input;
  MaskImage mask;
  FeatureMap target;
};

/// Mean |output - target| over hole pixels and channels. When `grad` is
/// non-null (shaped like `model`), the gradient is accumulated into it.
double hole_l1_loss(const PConvModel& model, const TrainingSample& sample,
                    PConvModel* grad = nullptr);

struct TrainOptions {
  std::uint64_t seed = 0;
  double min_hole_fraction = 0.05;
  double max_hole_fraction = 0.25;
};

struct TrainResult {
  PConvModel model;
  /// losses[0] is the loss before any update, losses[e] after epoch e.
  std::vector<double> losses;
};

/// Builds one sample per corpus image with a seeded random rectangular hole.
std::vector<TrainingSample> make_training_set(const std::vector<ImageBuffer>& corpus,
                                              int image_channels, const TrainOptions& opts);

/// Full-batch gradient descent on the hole L1 loss. Every image must share
/// one size; throws kEmptyCorpus for an empty corpus.
TrainResult train_toy(const PConvModel& model, const std::vector<ImageBuffer>& corpus,
                      int epochs, double lr, const TrainOptions& opts = {});

}  // namespace occu
