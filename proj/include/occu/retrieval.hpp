#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occu/catalog_store.hpp"
#include "occu/inpaint.hpp"
#include "occu/metadata.hpp"
#include "occu/preprocess.hpp"

namespace occu {

/// Per-category mean descriptors, keyed (and therefore ordered) by id.
struct CentroidSet {
  std::map<std::string, Centroid> by_category;
};

/// Throws kEmptyStore when the snapshot holds no products.
CentroidSet build_centroids(const CatalogSnapshot& snap);
CentroidSet build_centroids(const CatalogStore& store);

struct Classification {
  std::string category;
  double score = 0.0;
};

/// Nearest centroid by similarity; ties go to the smallest category id.
Classification classify_category(const Metadata& m, const CentroidSet& centroids,
                                 const SimilarityWeights& w = {});

struct PipelineOptions {
  PreprocessOptions preprocess;
  InpaintEngine engine = InpaintEngine::kDiffusion;
  int diffusion_iters = 2000;
  double diffusion_tol = 0.05;
  /// Required for the pconv engine. The pre-processed image is converted to
  /// the model's channel count before inpainting.
  const PConvModel* model = nullptr;
  SimilarityWeights weights;
};

/// Everything the query pipeline produced for one image.
struct QueryAnalysis {
  PreprocessReport preprocess;
  ImageBuffer restored;  // equals preprocess.output when no mask was given
  bool inpainted = false;
  Metadata metadata;
};

/// Pre-processing, then inpainting when a mask is given, then metadata.
QueryAnalysis analyze_query(const ImageBuffer& image, const std::optional<MaskImage>& mask,
                            const PipelineOptions& opts = {});

/// Restores the hole pixels of the pre-processed image; exposed for callers
/// that already hold a PreprocessReport.
ImageBuffer restore_image(const ImageBuffer& preprocessed, const MaskImage& mask,
                          const PipelineOptions& opts);

inline constexpr const char* kAutoCategory = "auto";

/// Provider branch: describes the image, assigns a category (nearest
/// centroid when `category` is "auto"), and stores it.
ProductRecord register_product(CatalogStore& store, const ImageBuffer& image,
                               const std::string& name, const std::string& category,
                               const PipelineOptions& opts = {});

struct ProductMatch {
  ProductRecord product;
  double score = 0.0;           // similarity to the query
  double category_score = 0.0;  // similarity of the query to the product's category centroid
};

struct SearchResult {
  std::vector<ProductMatch> matches;
  QueryAnalysis analysis;
  Classification category;
  std::string potential_id;
};

/// Ranks products against already-computed query metadata: the classified
/// category's products fill the result first, the remainder comes from the
/// other categories by similarity. The final list is ordered by score
/// (descending), ties by id.
std::vector<ProductMatch> rank_products(const CatalogSnapshot& snap, const Metadata& query,
                                        const CentroidSet& centroids,
                                        const Classification& category, std::size_t k,
                                        const SimilarityWeights& w = {});

/// Buyer branch: analyze, classify, rank, then record the query metadata as
/// a potential entry. Throws kEmptyStore for an empty catalog and
/// kInvalidArgument for k < 1.
SearchResult search(CatalogStore& store, const ImageBuffer& image,
                    const std::optional<MaskImage>& mask, int k,
                    const PipelineOptions& opts = {});

}  // namespace occu
