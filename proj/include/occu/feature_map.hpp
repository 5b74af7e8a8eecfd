#pragma once

#include <cstddef>
#include <vector>

namespace occu {

/// Real-valued activations stored planar: channel-major, then rows, then
/// columns. value(c, x, y) = values[(c * height + y) * width + x].
struct FeatureMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int w, int h, int c)
      : width(w), height(h), channels(c),
        values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                   static_cast<std::size_t>(c),
               0.0) {}

  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int c, int x, int y) const noexcept {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  double& at(int c, int x, int y) noexcept { return values[index(c, x, y)]; }
  double at(int c, int x, int y) const noexcept { return values[index(c, x, y)]; }
};

}  // namespace occu
