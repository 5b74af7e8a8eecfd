#include "occu/training.hpp"

#include <cmath>
#include <random>
#include <string>

#include "network.hpp"
#include "occu/damage.hpp"
#include "occu/error.hpp"

namespace occu {

double hole_l1_loss(const PConvModel& model, const TrainingSample& sample, PConvModel* grad) {
  detail::NetworkTrace trace;
  const detail::LayerTrace& out = detail::model_forward(model, sample.input, sample.mask, trace);
  const FeatureMap& y = out.post;
  const std::size_t holes = sample.mask.pixel_count() - sample.mask.valid_count();
  if (holes == 0) return 0.0;
  const double norm = 1.0 / static_cast<double>(holes * static_cast<std::size_t>(y.channels));

  double loss = 0.0;
  FeatureMap d_out(y.width, y.height, y.channels);
  for (int c = 0; c < y.channels; ++c) {
    for (int py = 0; py < y.height; ++py) {
      for (int px = 0; px < y.width; ++px) {
        if (sample.mask.valid(px, py)) continue;
        const double diff = y.at(c, px, py) - sample.target.at(c, px, py);
        loss += std::abs(diff);
        d_out.at(c, px, py) = diff > 0.0 ? norm : (diff < 0.0 ? -norm : 0.0);
      }
    }
  }
  if (grad) detail::model_backward(model, trace, d_out, *grad);
  return loss * norm;
}

std::vector<TrainingSample> make_training_set(const std::vector<ImageBuffer>& corpus,
                                              int image_channels, const TrainOptions& opts) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "training corpus is empty");
  std::mt19937_64 rng(opts.seed);
  std::vector<TrainingSample> samples;
  samples.reserve(corpus.size());
  const int w = corpus.front().width();
  const int h = corpus.front().height();
  for (const auto& raw : corpus) {
    if (raw.width() != w || raw.height() != h) {
      throw Error(ErrorCode::kShapeMismatch, "training images must share one size");
    }
    const ImageBuffer img = image_channels == 3 ? to_rgb(raw) : to_grayscale(raw);
    const double frac = opts.min_hole_fraction +
                        (opts.max_hole_fraction - opts.min_hole_fraction) * unit_uniform(rng);
    const MaskImage mask = rect_mask(w, h, random_rect(w, h, frac, rng));
    TrainingSample s;
    s.mask = mask;
    s.input = image_to_features(img, mask);
    s.target = image_to_features(img, MaskImage(w, h, true));
    samples.push_back(std::move(s));
  }
  return samples;
}

TrainResult train_toy(const PConvModel& model, const std::vector<ImageBuffer>& corpus,
                      int epochs, double lr, const TrainOptions& opts) {
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be non-negative");
  model.validate();
  TrainResult result{model, {}};
  const auto samples = make_training_set(corpus, model.image_channels, opts);
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  for (int epoch = 0; epoch <= epochs; ++epoch) {
    PConvModel grad = detail::zero_like(result.model);
    const bool update = epoch < epochs;
    double loss = 0.0;
    for (const auto& s : samples) loss += hole_l1_loss(result.model, s, update ? &grad : nullptr);
    result.losses.push_back(loss * inv_n);
    if (!update) break;

    const auto step = [&](std::vector<PConvLayer>& layers, const std::vector<PConvLayer>& g) {
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
          layers[l].weights[i] -= lr * inv_n * g[l].weights[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
          layers[l].bias[i] -= lr * inv_n * g[l].bias[i];
        }
      }
    };
    step(result.model.encoder, grad.encoder);
    step(result.model.decoder, grad.decoder);
  }
  return result;
}

}  // namespace occu
