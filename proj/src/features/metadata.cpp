#include "occu/metadata.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numbers>

#include "occu/error.hpp"

namespace occu {

bool Metadata::same_content(const Metadata& o) const {
  return color_hist == o.color_hist && edge_hist == o.edge_hist &&
         aspect_ratio == o.aspect_ratio && width == o.width && height == o.height &&
         category == o.category;
}

ColorHistogram color_histogram(const ImageBuffer& img) {
  ColorHistogram hist{};
  std::array<std::size_t, kColorBins> counts{};
  const auto s = img.data();
  const std::size_t n = img.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t r, g, b;
    if (img.channels() == 3) {
      r = s[3 * p] / 64u;
      g = s[3 * p + 1] / 64u;
      b = s[3 * p + 2] / 64u;
    } else {
      r = g = b = s[p] / 64u;
    }
    ++counts[16 * r + 4 * g + b];
  }
  for (std::size_t i = 0; i < kColorBins; ++i) {
    hist[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  }
  return hist;
}

EdgeHistogram edge_orientation_histogram(const ImageBuffer& img, const CannyParams& params) {
  const CannyStages st = canny_stages(img, params);
  std::array<std::size_t, kEdgeBins> counts{};
  std::size_t total = 0;
  const double bin_width = std::numbers::pi / static_cast<double>(kEdgeBins);
  for (std::size_t i = 0; i < st.edges.edge.size(); ++i) {
    if (!st.edges.edge[i]) continue;
    double theta = st.gradient.direction[i];
    if (theta < 0.0) theta += std::numbers::pi;
    if (theta >= std::numbers::pi) theta -= std::numbers::pi;
    const auto bin = std::min(static_cast<std::size_t>(theta / bin_width), kEdgeBins - 1);
    ++counts[bin];
    ++total;
  }
  EdgeHistogram hist{};
  if (total == 0) return hist;
  for (std::size_t i = 0; i < kEdgeBins; ++i) {
    hist[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return hist;
}

Metadata generate_metadata(const ImageBuffer& img, const CannyParams& params) {
  Metadata m;
  m.color_hist = color_histogram(img);
  m.edge_hist = edge_orientation_histogram(img, params);
  m.width = img.width();
  m.height = img.height();
  m.aspect_ratio = static_cast<double>(img.width()) / static_cast<double>(img.height());
  m.created_at = now_iso8601();
  return m;
}

double histogram_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

namespace {

double weighted(double color_cos, double edge_cos, const SimilarityWeights& w) {
  return std::clamp(w.color * color_cos + w.edge * edge_cos, 0.0, 1.0);
}

}  // namespace

double similarity(const Metadata& a, const Metadata& b, const SimilarityWeights& w) {
  return weighted(histogram_cosine(a.color_hist, b.color_hist),
                  histogram_cosine(a.edge_hist, b.edge_hist), w);
}

double similarity(const Metadata& a, const Centroid& c, const SimilarityWeights& w) {
  return weighted(histogram_cosine(a.color_hist, c.color_hist),
                  histogram_cosine(a.edge_hist, c.edge_hist), w);
}

Centroid mean_descriptor(std::span<const Metadata* const> members) {
  if (members.empty()) throw Error(ErrorCode::kInvalidArgument, "centroid of no members");
  Centroid c;
  for (const Metadata* m : members) {
    for (std::size_t i = 0; i < kColorBins; ++i) c.color_hist[i] += m->color_hist[i];
    for (std::size_t i = 0; i < kEdgeBins; ++i) c.edge_hist[i] += m->edge_hist[i];
  }
  const double n = static_cast<double>(members.size());
  for (double& v : c.color_hist) v /= n;
  for (double& v : c.edge_hist) v /= n;
  c.members = members.size();
  return c;
}

std::string now_iso8601() { return iso8601(std::chrono::system_clock::now()); }

std::string iso8601(std::chrono::system_clock::time_point now) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  const std::size_t len = std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof(out), "%.*s.%03dZ", static_cast<int>(len), buf, static_cast<int>(ms));
  return out;
}

void to_json(nlohmann::json& j, const Metadata& m) {
  j = nlohmann::json{{"colorHist", m.color_hist},
                     {"edgeHist", m.edge_hist},
                     {"aspectRatio", m.aspect_ratio},
                     {"width", m.width},
                     {"height", m.height},
                     {"category", m.category ? nlohmann::json(*m.category) : nlohmann::json()},
                     {"createdAt", m.created_at}};
}

void from_json(const nlohmann::json& j, Metadata& m) {
  try {
    j.at("colorHist").get_to(m.color_hist);
    j.at("edgeHist").get_to(m.edge_hist);
    j.at("aspectRatio").get_to(m.aspect_ratio);
    j.at("width").get_to(m.width);
    j.at("height").get_to(m.height);
    const auto& cat = j.at("category");
    m.category = cat.is_null() ? std::nullopt : std::optional<std::string>(cat.get<std::string>());
    j.at("createdAt").get_to(m.created_at);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("invalid metadata JSON: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const Centroid& c) {
  j = nlohmann::json{{"colorHist", c.color_hist}, {"edgeHist", c.edge_hist}, {"members", c.members}};
}

}  // namespace occu
