#include "occu/pconv.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "network.hpp"
#include "occu/error.hpp"
#include "occu/png_io.hpp"

namespace occu {
namespace {

constexpr char kMagic[8] = {'O', 'C', 'P', 'C', 'O', 'N', 'V', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(bits);
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kMalformedFile, "model file is truncated");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_layer(ByteWriter& w, const PConvLayer& l) {
  w.u32(static_cast<std::uint32_t>(l.in_channels));
  w.u32(static_cast<std::uint32_t>(l.out_channels));
  w.u32(static_cast<std::uint32_t>(l.kernel));
  w.u32(static_cast<std::uint32_t>(l.stride));
  w.u32(static_cast<std::uint32_t>(l.activation));
  for (double v : l.weights) w.f64(v);
  for (double v : l.bias) w.f64(v);
}

PConvLayer read_layer(ByteReader& r) {
  const auto in = r.u32();
  const auto out = r.u32();
  const auto k = r.u32();
  const auto stride = r.u32();
  const auto act = r.u32();
  if (in == 0 || out == 0 || k == 0 || in > 4096 || out > 4096 || k > 31 || stride == 0 ||
      stride > 16 || act > 2) {
    throw Error(ErrorCode::kMalformedFile, "model file has an implausible layer header");
  }
  PConvLayer l = make_layer(static_cast<int>(in), static_cast<int>(out), static_cast<int>(k),
                            static_cast<int>(stride), static_cast<Activation>(act));
  for (double& v : l.weights) v = r.f64();
  for (double& v : l.bias) v = r.f64();
  return l;
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double activate(Activation act, double v) noexcept {
  switch (act) {
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kLeakyRelu: return v > 0.0 ? v : kLeakySlope * v;
    case Activation::kNone: break;
  }
  return v;
}

double activate_grad(Activation act, double pre) noexcept {
  switch (act) {
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu: return pre > 0.0 ? 1.0 : kLeakySlope;
    case Activation::kNone: break;
  }
  return 1.0;
}

void PConvLayer::validate() const {
  if (in_channels < 1 || out_channels < 1 || stride < 1) {
    throw Error(ErrorCode::kInvalidArgument, "layer channel counts and stride must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "layer kernel size must be odd");
  }
  const std::size_t expected = static_cast<std::size_t>(out_channels) *
                               static_cast<std::size_t>(in_channels) *
                               static_cast<std::size_t>(kernel * kernel);
  if (weights.size() != expected || bias.size() != static_cast<std::size_t>(out_channels)) {
    throw Error(ErrorCode::kInvalidArgument, "layer parameter arrays have the wrong length");
  }
  for (double v : weights) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite layer weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite layer bias");
  }
}

PConvLayer make_layer(int in_channels, int out_channels, int kernel, int stride,
                      Activation activation) {
  PConvLayer l;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.activation = activation;
  l.weights.assign(static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_channels) *
                       static_cast<std::size_t>(kernel * kernel),
                   0.0);
  l.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
  l.validate();
  return l;
}

PConvResult pconv_forward(const PConvLayer& layer, const FeatureMap& x, const MaskImage& m) {
  layer.validate();
  PConvLayer linear = layer;
  linear.activation = Activation::kNone;
  detail::LayerTrace trace;
  detail::pconv_layer_forward(linear, x, m, trace);
  return {std::move(trace.pre), std::move(trace.out_mask)};
}

void PConvModel::validate() const {
  if (image_channels != 1 && image_channels != 3) {
    throw Error(ErrorCode::kShapeMismatch, "model image channels must be 1 or 3");
  }
  if (encoder.empty()) throw Error(ErrorCode::kShapeMismatch, "model has no encoder layers");
  if (!decoder.empty() && decoder.size() != encoder.size()) {
    throw Error(ErrorCode::kShapeMismatch, "decoder must mirror the encoder or be empty");
  }
  int channels = image_channels;
  std::vector<int> level_channels{image_channels};
  for (const auto& l : encoder) {
    l.validate();
    if (l.in_channels != channels) {
      throw Error(ErrorCode::kShapeMismatch, "encoder channel chain is inconsistent");
    }
    channels = l.out_channels;
    level_channels.push_back(channels);
  }
  if (decoder.empty()) {
    for (const auto& l : encoder) {
      if (l.stride != 1) {
        throw Error(ErrorCode::kShapeMismatch, "a decoder-less model must keep stride 1");
      }
    }
  }
  for (std::size_t j = 0; j < decoder.size(); ++j) {
    const auto& l = decoder[j];
    l.validate();
    const std::size_t level = encoder.size() - 1 - j;
    if (l.stride != 1 || l.in_channels != channels + level_channels[level]) {
      throw Error(ErrorCode::kShapeMismatch,
                  "decoder layer " + std::to_string(j) + " does not match its skip connection");
    }
    channels = l.out_channels;
  }
  if (channels != image_channels) {
    throw Error(ErrorCode::kShapeMismatch, "model output channels differ from image channels");
  }
}

std::size_t PConvModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto* layers : {&encoder, &decoder}) {
    for (const auto& l : *layers) n += l.weights.size() + l.bias.size();
  }
  return n;
}

void initialize_weights(PConvModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto* layers : {&model.encoder, &model.decoder}) {
    for (auto& l : *layers) {
      const double bound =
          std::sqrt(1.0 / static_cast<double>(l.in_channels * l.kernel * l.kernel));
      for (double& w : l.weights) w = (2.0 * uniform_unit(rng) - 1.0) * bound;
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  }
}

PConvModel default_model(int image_channels, std::uint64_t seed) {
  PConvModel m;
  m.image_channels = image_channels;
  m.encoder = {
      make_layer(image_channels, 16, 3, 2, Activation::kRelu),
      make_layer(16, 32, 3, 2, Activation::kRelu),
      make_layer(32, 64, 3, 2, Activation::kRelu),
  };
  m.decoder = {
      make_layer(64 + 32, 32, 3, 1, Activation::kLeakyRelu),
      make_layer(32 + 16, 16, 3, 1, Activation::kLeakyRelu),
      make_layer(16 + image_channels, image_channels, 3, 1, Activation::kNone),
  };
  initialize_weights(m, seed);
  m.validate();
  return m;
}

PConvResult pconv_model_forward(const PConvModel& model, const FeatureMap& input,
                                const MaskImage& mask) {
  detail::NetworkTrace trace;
  const detail::LayerTrace& out = detail::model_forward(model, input, mask, trace);
  return {out.post, out.out_mask};
}

std::vector<std::uint8_t> serialize_model(const PConvModel& model) {
  model.validate();
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.image_channels));
  w.u32(static_cast<std::uint32_t>(model.encoder.size()));
  w.u32(static_cast<std::uint32_t>(model.decoder.size()));
  for (const auto& l : model.encoder) write_layer(w, l);
  for (const auto& l : model.decoder) write_layer(w, l);
  return w.take();
}

PConvModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kMalformedFile, "not a partial-convolution model file");
  }
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "unsupported model format version " + std::to_string(version));
  }
  PConvModel m;
  m.image_channels = static_cast<int>(r.u32());
  const auto n_enc = r.u32();
  const auto n_dec = r.u32();
  if (n_enc > 64 || n_dec > 64) throw Error(ErrorCode::kMalformedFile, "implausible layer count");
  for (std::uint32_t i = 0; i < n_enc; ++i) m.encoder.push_back(read_layer(r));
  for (std::uint32_t i = 0; i < n_dec; ++i) m.decoder.push_back(read_layer(r));
  if (!r.done()) throw Error(ErrorCode::kMalformedFile, "trailing bytes after model data");
  m.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const PConvModel& model) {
  write_file_atomic(path, serialize_model(model));
}

PConvModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

FeatureMap image_to_features(const ImageBuffer& img, const MaskImage& mask) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw Error(ErrorCode::kShapeMismatch, "image and mask dimensions differ");
  }
  FeatureMap f(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask.valid(x, y)) continue;
      for (int c = 0; c < img.channels(); ++c) f.at(c, x, y) = img.at(x, y, c) / 255.0;
    }
  }
  return f;
}

}  // namespace occu
