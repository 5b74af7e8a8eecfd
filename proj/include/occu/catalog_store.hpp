#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "occu/image.hpp"
#include "occu/metadata.hpp"

namespace occu {

struct CategoryRecord {
  std::string id;
  std::string name;
  /// Mean of the member descriptors; empty for a category with no products.
  std::optional<Centroid> centroid;
};

struct ProductRecord {
  std::string id;  // generated when empty on insert
  std::string name;
  std::string category;
  Metadata metadata;
  std::string image_path;  // relative to the store root
  std::string registered_at;

  bool operator==(const ProductRecord& o) const;
};

struct PotentialRecord {
  std::string id;
  Metadata metadata;
  std::optional<std::string> matched_product;
  std::string stored_at;
};

void to_json(nlohmann::json& j, const ProductRecord& r);
void from_json(const nlohmann::json& j, ProductRecord& r);
void to_json(nlohmann::json& j, const PotentialRecord& r);
void from_json(const nlohmann::json& j, PotentialRecord& r);
void to_json(nlohmann::json& j, const CategoryRecord& r);

/// Immutable view of the index at one point in time. Products and
/// potentials are sorted by id.
struct CatalogSnapshot {
  std::vector<CategoryRecord> categories;
  std::vector<std::shared_ptr<const ProductRecord>> products;
  std::vector<std::shared_ptr<const PotentialRecord>> potentials;

  const ProductRecord* find_product(const std::string& id) const;
  bool has_category(const std::string& id) const;
};

/// File-backed catalog. Layout under the root directory:
///   categories.json   {"version": 1, "categories": [{"id", "name"}]}
///   products.jsonl    one ProductRecord per line, append-only
///   potentials.jsonl  one PotentialRecord per line, append-only
///   images/<id>.png   the registered image
///   .lock             advisory lock held while the store is open
///
/// Writes are serialized and fsync'd before returning; reads work on
/// immutable snapshots and never block on disk. A final index line without
/// its newline (an interrupted append) is dropped on open.
class CatalogStore {
 public:
  /// Opens (creating when `create` is set) the store at `root`. Throws
  /// kIOFailure when another process holds the lock or the root is missing.
  static std::unique_ptr<CatalogStore> open(const std::filesystem::path& root, bool create = true);

  ~CatalogStore();
  CatalogStore(const CatalogStore&) = delete;
  CatalogStore& operator=(const CatalogStore&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }
  std::shared_ptr<const CatalogSnapshot> snapshot() const;

  /// Throws kDuplicateId if the id exists; ids must be filename-safe.
  void add_category(const std::string& id, const std::string& name);
  /// Adds the category unless it already exists.
  void ensure_category(const std::string& id, const std::string& name);

  /// Stores the image and appends the record; returns the id. The record's
  /// metadata.category is forced to its category.
  std::string put_product(ProductRecord rec, const ImageBuffer& image);
  ProductRecord get_product(const std::string& id) const;
  std::vector<ProductRecord> list_products() const;
  std::vector<ProductRecord> list_by_category(const std::string& category) const;
  /// Categories sorted by id, each with its current centroid.
  std::vector<CategoryRecord> list_categories() const;
  std::size_t product_count() const;

  std::vector<std::uint8_t> product_image_bytes(const std::string& id) const;
  ImageBuffer load_product_image(const std::string& id) const;

  std::string put_potential(const Metadata& m, std::optional<std::string> matched_product);
  std::vector<PotentialRecord> list_potentials() const;

 private:
  CatalogStore(std::filesystem::path root, int lock_fd);
  void load();
  void write_categories(const std::vector<CategoryRecord>& cats) const;
  std::string next_id(char prefix);
  void publish(std::shared_ptr<const CatalogSnapshot> snap);

  std::filesystem::path root_;
  int lock_fd_ = -1;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const CatalogSnapshot> snapshot_;
  std::mutex write_mutex_;
  std::uint64_t last_id_micros_ = 0;
};

/// Letters, digits, '-', '_' and '.', not starting with '.'; at most 128 chars.
bool is_safe_id(const std::string& id);

}  // namespace occu
