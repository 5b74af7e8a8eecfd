#include "network.hpp"

#include <algorithm>
#include <string>

#include "occu/error.hpp"

namespace occu::detail {
namespace {

void require_shape(const PConvLayer& layer, const FeatureMap& x, const MaskImage& m) {
  if (x.channels != layer.in_channels) {
    throw Error(ErrorCode::kShapeMismatch,
                "layer expects " + std::to_string(layer.in_channels) + " channels, got " +
                    std::to_string(x.channels));
  }
  if (x.width != m.width() || x.height != m.height()) {
    throw Error(ErrorCode::kShapeMismatch, "feature map and mask dimensions differ");
  }
}

FeatureMap upsample(const FeatureMap& src, int factor, int width, int height) {
  FeatureMap out(width, height, src.channels);
  for (int c = 0; c < src.channels; ++c) {
    for (int y = 0; y < height; ++y) {
      const int sy = std::min(y / factor, src.height - 1);
      for (int x = 0; x < width; ++x) {
        out.at(c, x, y) = src.at(c, std::min(x / factor, src.width - 1), sy);
      }
    }
  }
  return out;
}

MaskImage upsample(const MaskImage& src, int factor, int width, int height) {
  MaskImage out(width, height, false);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(y / factor, src.height() - 1);
    for (int x = 0; x < width; ++x) {
      out.set(x, y, src.valid(std::min(x / factor, src.width() - 1), sy));
    }
  }
  return out;
}

// Adjoint of upsample: every source cell collects the gradient of the cells
// copied from it.
void upsample_backward(const FeatureMap& d_up, int factor, FeatureMap& d_src,
                       int channel_offset) {
  for (int c = 0; c < d_src.channels; ++c) {
    for (int y = 0; y < d_up.height; ++y) {
      const int sy = std::min(y / factor, d_src.height - 1);
      for (int x = 0; x < d_up.width; ++x) {
        d_src.at(c, std::min(x / factor, d_src.width - 1), sy) +=
            d_up.at(c + channel_offset, x, y);
      }
    }
  }
}

FeatureMap concat(const FeatureMap& a, const FeatureMap& b) {
  FeatureMap out(a.width, a.height, a.channels + b.channels);
  std::copy(a.values.begin(), a.values.end(), out.values.begin());
  std::copy(b.values.begin(), b.values.end(),
            out.values.begin() + static_cast<std::ptrdiff_t>(a.values.size()));
  return out;
}

MaskImage mask_union(const MaskImage& a, const MaskImage& b) {
  MaskImage out(a.width(), a.height(), false);
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) out.set(x, y, a.valid(x, y) || b.valid(x, y));
  }
  return out;
}

const FeatureMap& skip_features(const NetworkTrace& trace, const FeatureMap& input, int level) {
  return level == 0 ? input : trace.encoder[static_cast<std::size_t>(level - 1)].post;
}

const MaskImage& skip_mask(const NetworkTrace& trace, const MaskImage& mask, int level) {
  return level == 0 ? mask : trace.encoder[static_cast<std::size_t>(level - 1)].out_mask;
}

}  // namespace

void pconv_layer_forward(const PConvLayer& layer, const FeatureMap& x, const MaskImage& m,
                         LayerTrace& trace) {
  require_shape(layer, x, m);
  const int w = x.width;
  const int h = x.height;
  const int k = layer.kernel;
  const int pad = k / 2;
  const int s = layer.stride;
  const int ow = layer.out_extent(w);
  const int oh = layer.out_extent(h);

  trace.in_mask = m;
  trace.input = x;
  for (int c = 0; c < x.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        if (!m.valid(xx, y)) trace.input.at(c, xx, y) = 0.0;
      }
    }
  }

  // Renormalization: in-image window size over valid count. Positions
  // outside the image count in neither, so an all-valid mask gives 1.
  trace.scale.assign(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh), 0.0);
  trace.out_mask = MaskImage(ow, oh, false);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      int inside = 0;
      int valid = 0;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * s + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * s + kx - pad;
          if (ix < 0 || ix >= w) continue;
          ++inside;
          valid += m.valid(ix, iy) ? 1 : 0;
        }
      }
      if (valid > 0) {
        trace.scale[static_cast<std::size_t>(oy * ow + ox)] =
            static_cast<double>(inside) / static_cast<double>(valid);
        trace.out_mask.set(ox, oy, true);
      }
    }
  }

  trace.pre = FeatureMap(ow, oh, layer.out_channels);
  for (int o = 0; o < layer.out_channels; ++o) {
    double* acc = trace.pre.values.data() + static_cast<std::size_t>(o) * trace.pre.plane_size();
    for (int i = 0; i < layer.in_channels; ++i) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wgt = layer.weights[layer.weight_index(o, i, ky, kx)];
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const double* row = trace.input.values.data() + trace.input.index(i, 0, iy);
            double* out_row = acc + static_cast<std::size_t>(oy * ow);
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s + kx - pad;
              if (ix < 0 || ix >= w) continue;
              out_row[ox] += wgt * row[ix];
            }
          }
        }
      }
    }
    const double b = layer.bias[static_cast<std::size_t>(o)];
    for (std::size_t p = 0; p < trace.pre.plane_size(); ++p) {
      acc[p] = trace.scale[p] > 0.0 ? acc[p] * trace.scale[p] + b : 0.0;
    }
  }

  trace.post = trace.pre;
  for (double& v : trace.post.values) v = activate(layer.activation, v);
}

FeatureMap pconv_layer_backward(const PConvLayer& layer, const LayerTrace& trace,
                                const FeatureMap& d_post, PConvLayer& grad) {
  const int w = trace.input.width;
  const int h = trace.input.height;
  const int k = layer.kernel;
  const int pad = k / 2;
  const int s = layer.stride;
  const int ow = trace.pre.width;
  const int oh = trace.pre.height;

  // Gradient at the renormalized sum: zero where the window was empty.
  FeatureMap g(ow, oh, layer.out_channels);
  for (int o = 0; o < layer.out_channels; ++o) {
    double bias_grad = 0.0;
    for (std::size_t p = 0; p < g.plane_size(); ++p) {
      const std::size_t idx = static_cast<std::size_t>(o) * g.plane_size() + p;
      if (trace.scale[p] == 0.0) continue;
      const double d_pre = d_post.values[idx] * activate_grad(layer.activation, trace.pre.values[idx]);
      bias_grad += d_pre;
      g.values[idx] = d_pre * trace.scale[p];
    }
    grad.bias[static_cast<std::size_t>(o)] += bias_grad;
  }

  FeatureMap d_input(w, h, layer.in_channels);
  for (int o = 0; o < layer.out_channels; ++o) {
    const double* go = g.values.data() + static_cast<std::size_t>(o) * g.plane_size();
    for (int i = 0; i < layer.in_channels; ++i) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t wi = layer.weight_index(o, i, ky, kx);
          const double wgt = layer.weights[wi];
          double w_grad = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const std::size_t row = trace.input.index(i, 0, iy);
            const double* in_row = trace.input.values.data() + row;
            double* d_row = d_input.values.data() + row;
            const double* g_row = go + static_cast<std::size_t>(oy * ow);
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s + kx - pad;
              if (ix < 0 || ix >= w) continue;
              w_grad += g_row[ox] * in_row[ix];
              d_row[ix] += g_row[ox] * wgt;
            }
          }
          grad.weights[wi] += w_grad;
        }
      }
    }
  }

  // X * M: holes receive no gradient.
  for (int c = 0; c < d_input.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!trace.in_mask.valid(x, y)) d_input.at(c, x, y) = 0.0;
      }
    }
  }
  return d_input;
}

const LayerTrace& model_forward(const PConvModel& model, const FeatureMap& input,
                                const MaskImage& mask, NetworkTrace& trace) {
  model.validate();
  if (input.width != mask.width() || input.height != mask.height()) {
    throw Error(ErrorCode::kShapeMismatch, "input and mask dimensions differ");
  }
  if (input.channels != model.image_channels) {
    throw Error(ErrorCode::kShapeMismatch,
                "model expects " + std::to_string(model.image_channels) +
                    "-channel images, got " + std::to_string(input.channels));
  }
  const std::size_t n = model.encoder.size();
  trace.encoder.assign(n, LayerTrace{});
  trace.decoder.assign(model.decoder.size(), LayerTrace{});

  // Holes are zeroed once here so the level-0 skip never carries hole values.
  trace.input = input;
  for (int c = 0; c < input.channels; ++c) {
    for (int y = 0; y < input.height; ++y) {
      for (int xx = 0; xx < input.width; ++xx) {
        if (!mask.valid(xx, y)) trace.input.at(c, xx, y) = 0.0;
      }
    }
  }
  const FeatureMap* x = &trace.input;
  const MaskImage* m = &mask;
  for (std::size_t i = 0; i < n; ++i) {
    pconv_layer_forward(model.encoder[i], *x, *m, trace.encoder[i]);
    x = &trace.encoder[i].post;
    m = &trace.encoder[i].out_mask;
  }
  for (std::size_t j = 0; j < model.decoder.size(); ++j) {
    const int level = static_cast<int>(n - 1 - j);
    const FeatureMap& skip = skip_features(trace, trace.input, level);
    const MaskImage& skip_m = skip_mask(trace, mask, level);
    const int factor = model.encoder[static_cast<std::size_t>(level)].stride;
    const FeatureMap up = upsample(*x, factor, skip.width, skip.height);
    const MaskImage up_m = upsample(*m, factor, skip.width, skip.height);
    pconv_layer_forward(model.decoder[j], concat(up, skip), mask_union(up_m, skip_m),
                        trace.decoder[j]);
    x = &trace.decoder[j].post;
    m = &trace.decoder[j].out_mask;
  }
  return model.decoder.empty() ? trace.encoder.back() : trace.decoder.back();
}

void model_backward(const PConvModel& model, const NetworkTrace& trace,
                    const FeatureMap& d_output, PConvModel& grad) {
  const std::size_t n = model.encoder.size();
  // Gradient arriving at each encoder output (index i = encoder layer i).
  std::vector<FeatureMap> d_enc(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureMap& post = trace.encoder[i].post;
    d_enc[i] = FeatureMap(post.width, post.height, post.channels);
  }

  FeatureMap d_x = d_output;
  for (std::size_t jj = model.decoder.size(); jj-- > 0;) {
    const int level = static_cast<int>(n - 1 - jj);
    const FeatureMap d_cat = pconv_layer_backward(model.decoder[jj], trace.decoder[jj], d_x,
                                                  grad.decoder[jj]);
    // Split into the upsampled part and the skip part.
    const FeatureMap& below = jj == 0 ? trace.encoder[n - 1].post : trace.decoder[jj - 1].post;
    const int up_channels = below.channels;
    FeatureMap d_below(below.width, below.height, below.channels);
    const int factor = model.encoder[static_cast<std::size_t>(level)].stride;
    upsample_backward(d_cat, factor, d_below, 0);
    if (level > 0) {
      FeatureMap& d_skip = d_enc[static_cast<std::size_t>(level - 1)];
      const std::size_t offset = static_cast<std::size_t>(up_channels) * d_cat.plane_size();
      for (std::size_t p = 0; p < d_skip.values.size(); ++p) {
        d_skip.values[p] += d_cat.values[offset + p];
      }
    }
    d_x = std::move(d_below);
  }
  if (n > 0) {
    // d_x now holds the gradient w.r.t. the deepest encoder output (from the
    // decoder path), or d_output itself when there is no decoder.
    for (std::size_t p = 0; p < d_x.values.size(); ++p) d_enc[n - 1].values[p] += d_x.values[p];
    for (std::size_t ii = n; ii-- > 0;) {
      FeatureMap d_in = pconv_layer_backward(model.encoder[ii], trace.encoder[ii], d_enc[ii],
                                             grad.encoder[ii]);
      if (ii > 0) {
        for (std::size_t p = 0; p < d_in.values.size(); ++p) d_enc[ii - 1].values[p] += d_in.values[p];
      }
    }
  }
}

PConvModel zero_like(const PConvModel& model) {
  PConvModel z = model;
  for (auto* layers : {&z.encoder, &z.decoder}) {
    for (auto& l : *layers) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  }
  return z;
}

}  // namespace occu::detail
