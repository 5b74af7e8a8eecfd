#include "occu/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "occu/damage.hpp"
#include "occu/error.hpp"

namespace occu {
namespace {

using Rgb = std::array<int, 3>;

struct Motif {
  const char* category;
  Rgb background;
  Rgb foreground;
  int shape;  // 0 disc, 1 square, 2 triangle, 3 stripes
};

constexpr std::array<Motif, 4> kMotifs{{
    {"red-discs", {190, 30, 30}, {240, 220, 200}, 0},
    {"green-squares", {30, 150, 40}, {20, 60, 20}, 1},
    {"blue-triangles", {30, 50, 180}, {230, 230, 60}, 2},
    {"orange-stripes", {230, 140, 30}, {110, 60, 20}, 3},
}};

Rgb jitter(const Rgb& base, int amount, std::mt19937_64& rng) {
  Rgb out;
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = std::clamp(base[c] + uniform_int(rng, -amount, amount), 0, 255);
  }
  return out;
}

bool inside_shape(int shape, int x, int y, int cx, int cy, int r, int period) {
  switch (shape) {
    case 0: return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
    case 1: return std::abs(x - cx) <= r && std::abs(y - cy) <= r;
    case 2: {
      // Upward triangle with apex at (cx, cy - r) and base at cy + r.
      if (y < cy - r || y > cy + r) return false;
      const int half = (y - (cy - r)) / 2;
      return std::abs(x - cx) <= half;
    }
    default: return ((x + y) / period) % 2 == 0;
  }
}

}  // namespace

std::vector<SyntheticItem> make_synthetic_corpus(int per_category, std::uint64_t seed, int size) {
  if (per_category < 1 || size < 8) {
    throw Error(ErrorCode::kInvalidArgument, "corpus needs >= 1 image per category and size >= 8");
  }
  std::mt19937_64 rng(seed);
  std::vector<SyntheticItem> items;
  for (const Motif& motif : kMotifs) {
    for (int i = 0; i < per_category; ++i) {
      const Rgb bg = jitter(motif.background, 12, rng);
      const Rgb fg = jitter(motif.foreground, 12, rng);
      const int r = uniform_int(rng, size / 6, size / 3);
      const int cx = uniform_int(rng, r, size - 1 - r);
      const int cy = uniform_int(rng, r, size - 1 - r);
      const int period = uniform_int(rng, 4, 8);
      ImageBuffer img(size, size, 3);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const Rgb& col = inside_shape(motif.shape, x, y, cx, cy, r, period) ? fg : bg;
          for (int c = 0; c < 3; ++c) {
            img.at(x, y, c) = static_cast<std::uint8_t>(
                std::clamp(col[static_cast<std::size_t>(c)] + uniform_int(rng, -4, 4), 0, 255));
          }
        }
      }
      char name[64];
      std::snprintf(name, sizeof(name), "%s-%02d", motif.category, i);
      items.push_back({motif.category, name, std::move(img)});
    }
  }
  return items;
}

BenchReport run_bench(const CatalogStore& store, double hole_fraction, std::uint64_t seed,
                      const PipelineOptions& opts) {
  const auto snap = store.snapshot();
  const CentroidSet centroids = build_centroids(*snap);
  BenchReport report;
  report.corpus_size = snap->products.size();
  report.hole_fraction = hole_fraction;
  report.seed = seed;

  std::size_t raw_hits = 0;
  std::size_t pipeline_hits = 0;
  std::uint64_t index = 0;
  for (const auto& product : snap->products) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * ++index));
    const ImageBuffer clean = store.load_product_image(product->id);
    const Rect hole = random_rect(clean.width(), clean.height(), hole_fraction, rng);
    const ImageBuffer damaged = occlude(clean, hole, rng);
    const MaskImage mask = rect_mask(clean.width(), clean.height(), hole);

    const Classification raw =
        classify_category(generate_metadata(damaged, opts.preprocess.canny), centroids, opts.weights);
    const Classification piped =
        classify_category(analyze_query(damaged, mask, opts).metadata, centroids, opts.weights);

    BenchRow row{product->id, product->category, raw.category, piped.category, raw.score, piped.score};
    report.raw_mean_score += raw.score;
    report.pipeline_mean_score += piped.score;
    raw_hits += row.raw_prediction == row.truth ? 1 : 0;
    pipeline_hits += row.pipeline_prediction == row.truth ? 1 : 0;
    report.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(report.rows.size());
  report.raw_accuracy = static_cast<double>(raw_hits) / n;
  report.pipeline_accuracy = static_cast<double>(pipeline_hits) / n;
  report.raw_mean_score /= n;
  report.pipeline_mean_score /= n;
  return report;
}

void to_json(nlohmann::json& j, const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"productId", row.product_id},
                    {"truth", row.truth},
                    {"rawPrediction", row.raw_prediction},
                    {"pipelinePrediction", row.pipeline_prediction},
                    {"rawScore", row.raw_score},
                    {"pipelineScore", row.pipeline_score}});
  }
  j = nlohmann::json{{"corpusSize", r.corpus_size},
                     {"holeFraction", r.hole_fraction},
                     {"seed", r.seed},
                     {"pipelineAccuracy", r.pipeline_accuracy},
                     {"rawAccuracy", r.raw_accuracy},
                     {"pipelineMeanScore", r.pipeline_mean_score},
                     {"rawMeanScore", r.raw_mean_score},
                     {"rows", rows}};
}

std::string format_table(const BenchReport& r) {
  std::size_t id_w = 7, cat_w = 5;
  for (const auto& row : r.rows) {
    id_w = std::max(id_w, row.product_id.size());
    cat_w = std::max({cat_w, row.truth.size(), row.raw_prediction.size(),
                      row.pipeline_prediction.size()});
  }
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-*s  %-*s  %-*s  %-*s  %7s  %7s\n", static_cast<int>(id_w),
                "product", static_cast<int>(cat_w), "truth", static_cast<int>(cat_w), "raw",
                static_cast<int>(cat_w), "pipeline", "raw_s", "pipe_s");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof(line), "%-*s  %-*s  %-*s  %-*s  %7.4f  %7.4f\n",
                  static_cast<int>(id_w), row.product_id.c_str(), static_cast<int>(cat_w),
                  row.truth.c_str(), static_cast<int>(cat_w), row.raw_prediction.c_str(),
                  static_cast<int>(cat_w), row.pipeline_prediction.c_str(), row.raw_score,
                  row.pipeline_score);
    out << line;
  }
  std::snprintf(line, sizeof(line),
                "queries %zu  hole-frac %.3f  seed %llu  top-1 raw %.4f  top-1 pipeline %.4f  "
                "mean score raw %.4f  pipeline %.4f\n",
                r.corpus_size, r.hole_fraction, static_cast<unsigned long long>(r.seed),
                r.raw_accuracy, r.pipeline_accuracy, r.raw_mean_score, r.pipeline_mean_score);
  out << line;
  return out.str();
}

}  // namespace occu
