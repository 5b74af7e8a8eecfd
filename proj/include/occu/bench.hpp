#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "occu/catalog_store.hpp"
#include "occu/retrieval.hpp"

namespace occu {

struct SyntheticItem {
  std::string category;
  std::string name;
  ImageBuffer image;
};

/// Four visually distinct categories (background colour plus a shape
/// motif), `per_category` seeded variations each, `size` x `size` RGB.
std::vector<SyntheticItem> make_synthetic_corpus(int per_category, std::uint64_t seed,
                                                 int size = 64);

struct BenchRow {
  std::string product_id;
  std::string truth;
  std::string raw_prediction;
  std::string pipeline_prediction;
  double raw_score = 0.0;
  double pipeline_score = 0.0;
};

struct BenchReport {
  std::size_t corpus_size = 0;
  double hole_fraction = 0.0;
  std::uint64_t seed = 0;
  double pipeline_accuracy = 0.0;
  double raw_accuracy = 0.0;
  // Mean similarity to the predicted category's centroid.
  double pipeline_mean_score = 0.0;
  double raw_mean_score = 0.0;
  std::vector<BenchRow> rows;
};

/// Damages every stored product with one seeded rectangle of the given area
/// fraction (filled with noise) and classifies it twice: from the damaged
/// image as-is, and through pre-processing plus inpainting with the known
/// mask. Read-only against the store.
BenchReport run_bench(const CatalogStore& store, double hole_fraction, std::uint64_t seed,
                      const PipelineOptions& opts = {});

void to_json(nlohmann::json& j, const BenchReport& r);
/// Aligned plain-text table, one row per query plus a summary.
std::string format_table(const BenchReport& r);

}  // namespace occu
