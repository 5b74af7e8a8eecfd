#include "occu/retrieval.hpp"

#include <algorithm>

#include "occu/error.hpp"

namespace occu {

CentroidSet build_centroids(const CatalogSnapshot& snap) {
  if (snap.products.empty()) throw Error(ErrorCode::kEmptyStore, "the catalog has no products");
  std::map<std::string, std::vector<const Metadata*>> members;
  for (const auto& p : snap.products) members[p->category].push_back(&p->metadata);
  CentroidSet set;
  for (const auto& [category, list] : members) set.by_category.emplace(category, mean_descriptor(list));
  return set;
}

CentroidSet build_centroids(const CatalogStore& store) { return build_centroids(*store.snapshot()); }

Classification classify_category(const Metadata& m, const CentroidSet& centroids,
                                 const SimilarityWeights& w) {
  if (centroids.by_category.empty()) {
    throw Error(ErrorCode::kEmptyCentroids, "no category centroids to compare against");
  }
  Classification best{"", -1.0};
  // Map iteration is in ascending id order, so a strict comparison keeps the
  // smallest id on ties.
  for (const auto& [category, centroid] : centroids.by_category) {
    const double s = similarity(m, centroid, w);
    if (s > best.score) best = {category, s};
  }
  return best;
}

ImageBuffer restore_image(const ImageBuffer& preprocessed, const MaskImage& mask,
                          const PipelineOptions& opts) {
  InpaintRequest req;
  req.image = preprocessed;
  req.mask = mask;
  req.engine = opts.engine;
  req.diffusion_iters = opts.diffusion_iters;
  req.diffusion_tol = opts.diffusion_tol;
  if (opts.engine == InpaintEngine::kPconv && opts.model) {
    req.image = opts.model->image_channels == 3 ? to_rgb(preprocessed) : to_grayscale(preprocessed);
  }
  return inpaint(req, opts.model);
}

QueryAnalysis analyze_query(const ImageBuffer& image, const std::optional<MaskImage>& mask,
                            const PipelineOptions& opts) {
  if (mask && (mask->width() != image.width() || mask->height() != image.height())) {
    throw Error(ErrorCode::kShapeMismatch, "mask dimensions differ from the image");
  }
  QueryAnalysis a;
  a.preprocess = preprocess_auto(image, opts.preprocess);
  if (mask) {
    a.restored = restore_image(a.preprocess.output, *mask, opts);
    a.inpainted = true;
  } else {
    a.restored = a.preprocess.output;
  }
  a.metadata = generate_metadata(a.restored, opts.preprocess.canny);
  return a;
}

ProductRecord register_product(CatalogStore& store, const ImageBuffer& image,
                               const std::string& name, const std::string& category,
                               const PipelineOptions& opts) {
  const auto snap = store.snapshot();
  if (category != kAutoCategory && !snap->has_category(category)) {
    throw Error(ErrorCode::kUnknownCategory, "unknown category '" + category + "'");
  }
  QueryAnalysis a = analyze_query(image, std::nullopt, opts);
  ProductRecord rec;
  rec.name = name;
  rec.category = category == kAutoCategory
                     ? classify_category(a.metadata, build_centroids(*snap), opts.weights).category
                     : category;
  rec.metadata = std::move(a.metadata);
  const std::string id = store.put_product(std::move(rec), image);
  return store.get_product(id);
}

std::vector<ProductMatch> rank_products(const CatalogSnapshot& snap, const Metadata& query,
                                        const CentroidSet& centroids,
                                        const Classification& category, std::size_t k,
                                        const SimilarityWeights& w) {
  std::vector<ProductMatch> in_cat;
  std::vector<ProductMatch> others;
  for (const auto& p : snap.products) {
    ProductMatch m{*p, similarity(query, p->metadata, w), 0.0};
    const auto c = centroids.by_category.find(p->category);
    if (c != centroids.by_category.end()) m.category_score = similarity(query, c->second, w);
    (p->category == category.category ? in_cat : others).push_back(std::move(m));
  }
  const auto by_rank = [](const ProductMatch& a, const ProductMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.product.id < b.product.id;
  };
  std::sort(in_cat.begin(), in_cat.end(), by_rank);
  std::sort(others.begin(), others.end(), by_rank);

  std::vector<ProductMatch> out;
  for (auto& m : in_cat) {
    if (out.size() == k) break;
    out.push_back(std::move(m));
  }
  for (auto& m : others) {
    if (out.size() == k) break;
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), by_rank);
  return out;
}

SearchResult search(CatalogStore& store, const ImageBuffer& image,
                    const std::optional<MaskImage>& mask, int k, const PipelineOptions& opts) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const auto snap = store.snapshot();
  if (snap->products.empty()) throw Error(ErrorCode::kEmptyStore, "the catalog has no products");

  SearchResult r;
  r.analysis = analyze_query(image, mask, opts);
  const CentroidSet centroids = build_centroids(*snap);
  r.category = classify_category(r.analysis.metadata, centroids, opts.weights);
  r.matches = rank_products(*snap, r.analysis.metadata, centroids, r.category,
                            static_cast<std::size_t>(k), opts.weights);
  r.potential_id = store.put_potential(
      r.analysis.metadata,
      r.matches.empty() ? std::nullopt : std::optional<std::string>(r.matches.front().product.id));
  return r;
}

}  // namespace occu
