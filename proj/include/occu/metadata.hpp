#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "occu/canny.hpp"
#include "occu/image.hpp"

namespace occu {

inline constexpr std::size_t kColorBins = 64;  // 4 x 4 x 4 RGB cells
inline constexpr std::size_t kEdgeBins = 8;    // orientation over [0, pi)

using ColorHistogram = std::array<double, kColorBins>;
using EdgeHistogram = std::array<double, kEdgeBins>;

/// Structured visual descriptor of one image.
struct Metadata {
  ColorHistogram color_hist{};
  EdgeHistogram edge_hist{};
  double aspect_ratio = 1.0;
  int width = 0;
  int height = 0;
  std::optional<std::string> category;
  std::string created_at;  // ISO-8601 UTC

  /// Equality of the content fields; created_at is ignored.
  bool same_content(const Metadata& other) const;
};

/// Mean descriptor of a group of images.
struct Centroid {
  ColorHistogram color_hist{};
  EdgeHistogram edge_hist{};
  std::size_t members = 0;
};

struct SimilarityWeights {
  double color = 0.7;
  double edge = 0.3;
};

/// Bin (R/64, G/64, B/64) -> 16 R + 4 G + B; normalized by pixel count.
/// Gray images count as R = G = B.
ColorHistogram color_histogram(const ImageBuffer& img);

/// Orientation histogram of the detector's edge pixels, directions folded
/// into [0, pi). All zero when no edge pixel exists.
EdgeHistogram edge_orientation_histogram(const ImageBuffer& img, const CannyParams& params = {});

Metadata generate_metadata(const ImageBuffer& img, const CannyParams& params = {});

/// Cosine similarity with explicit zero-vector rules: both zero -> 1, one
/// zero -> 0. Clamped to [0, 1] (histograms are non-negative).
double histogram_cosine(std::span<const double> a, std::span<const double> b);

/// w_c * cos(color) + w_e * cos(edge), clamped to [0, 1].
double similarity(const Metadata& a, const Metadata& b, const SimilarityWeights& w = {});
double similarity(const Metadata& a, const Centroid& c, const SimilarityWeights& w = {});

/// Component-wise mean; throws kInvalidArgument for an empty span.
Centroid mean_descriptor(std::span<const Metadata* const> members);

std::string now_iso8601();
/// UTC with millisecond precision, e.g. 2024-05-01T12:00:00.000Z.
std::string iso8601(std::chrono::system_clock::time_point t);

// JSON field names: colorHist, edgeHist, aspectRatio, width, height,
// category (null when unset), createdAt.
void to_json(nlohmann::json& j, const Metadata& m);
void from_json(const nlohmann::json& j, Metadata& m);
void to_json(nlohmann::json& j, const Centroid& c);

}  // namespace occu
