#include "occu/catalog_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <string_view>

#include "occu/error.hpp"
#include "occu/png_io.hpp"

namespace occu {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCategoriesVersion = 1;
constexpr const char* kCategoriesFile = "categories.json";
constexpr const char* kProductsFile = "products.jsonl";
constexpr const char* kPotentialsFile = "potentials.jsonl";

void append_line(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIOFailure, "cannot open " + path.string());
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::kIOFailure, "append to " + path.string() + " failed");
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::kIOFailure, "fsync failed for " + path.string());
}

// Returns the complete lines of a JSON-lines index. An unterminated tail is
// cut off the file so later appends start on a fresh line.
std::vector<std::string> read_index_lines(const fs::path& path) {
  std::vector<std::string> lines;
  if (!fs::exists(path)) return lines;
  const auto bytes = read_file(path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      std::error_code ec;
      fs::resize_file(path, start, ec);
      if (ec) throw Error(ErrorCode::kIOFailure, "cannot trim " + path.string());
      break;
    }
    if (nl > start) lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

template <typename Record>
std::vector<std::shared_ptr<const Record>> parse_index(const fs::path& path) {
  std::vector<std::shared_ptr<const Record>> out;
  std::size_t line_no = 0;
  for (const auto& line : read_index_lines(path)) {
    ++line_no;
    try {
      out.push_back(std::make_shared<const Record>(json::parse(line).get<Record>()));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedFile,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a->id < b->id; });
  return out;
}

template <typename Ptr>
auto find_by_id(const std::vector<Ptr>& items, const std::string& id) {
  return std::lower_bound(items.begin(), items.end(), id,
                          [](const Ptr& p, const std::string& key) { return p->id < key; });
}

}  // namespace

bool ProductRecord::operator==(const ProductRecord& o) const {
  return id == o.id && name == o.name && category == o.category &&
         metadata.same_content(o.metadata) && metadata.created_at == o.metadata.created_at &&
         image_path == o.image_path && registered_at == o.registered_at;
}

void to_json(json& j, const ProductRecord& r) {
  j = json{{"id", r.id},           {"name", r.name},           {"category", r.category},
           {"metadata", r.metadata}, {"imagePath", r.image_path}, {"registeredAt", r.registered_at}};
}

void from_json(const json& j, ProductRecord& r) {
  j.at("id").get_to(r.id);
  j.at("name").get_to(r.name);
  j.at("category").get_to(r.category);
  j.at("metadata").get_to(r.metadata);
  j.at("imagePath").get_to(r.image_path);
  j.at("registeredAt").get_to(r.registered_at);
}

void to_json(json& j, const PotentialRecord& r) {
  j = json{{"id", r.id},
           {"metadata", r.metadata},
           {"matchedProduct", r.matched_product ? json(*r.matched_product) : json()},
           {"storedAt", r.stored_at}};
}

void from_json(const json& j, PotentialRecord& r) {
  j.at("id").get_to(r.id);
  j.at("metadata").get_to(r.metadata);
  const auto& mp = j.at("matchedProduct");
  r.matched_product = mp.is_null() ? std::nullopt : std::optional<std::string>(mp.get<std::string>());
  j.at("storedAt").get_to(r.stored_at);
}

void to_json(json& j, const CategoryRecord& r) {
  j = json{{"id", r.id}, {"name", r.name}};
  j["centroid"] = r.centroid ? json(*r.centroid) : json();
}

const ProductRecord* CatalogSnapshot::find_product(const std::string& id) const {
  const auto it = find_by_id(products, id);
  return it != products.end() && (*it)->id == id ? it->get() : nullptr;
}

bool CatalogSnapshot::has_category(const std::string& id) const {
  return std::any_of(categories.begin(), categories.end(),
                     [&](const CategoryRecord& c) { return c.id == id; });
}

bool is_safe_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
           ch == '-' || ch == '_' || ch == '.';
  });
}

std::unique_ptr<CatalogStore> CatalogStore::open(const fs::path& root, bool create) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    if (!create) throw Error(ErrorCode::kIOFailure, "no catalog store at " + root.string());
    fs::create_directories(root, ec);
    if (ec) throw Error(ErrorCode::kIOFailure, "cannot create " + root.string() + ": " + ec.message());
  }
  fs::create_directories(root / "images", ec);
  if (ec) throw Error(ErrorCode::kIOFailure, "cannot create image directory: " + ec.message());

  const fs::path lock_path = root / ".lock";
  const int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIOFailure, "cannot open " + lock_path.string());
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kIOFailure, "catalog store " + root.string() + " is in use");
  }
  std::unique_ptr<CatalogStore> store(new CatalogStore(root, fd));
  store->load();
  return store;
}

CatalogStore::CatalogStore(fs::path root, int lock_fd) : root_(std::move(root)), lock_fd_(lock_fd) {}

CatalogStore::~CatalogStore() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void CatalogStore::load() {
  auto snap = std::make_shared<CatalogSnapshot>();
  const fs::path cat_path = root_ / kCategoriesFile;
  if (fs::exists(cat_path)) {
    const auto bytes = read_file(cat_path);
    try {
      const json doc = json::parse(bytes.begin(), bytes.end());
      const int version = doc.at("version").get<int>();
      if (version != kCategoriesVersion) {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "unsupported categories.json version " + std::to_string(version));
      }
      for (const auto& c : doc.at("categories")) {
        snap->categories.push_back({c.at("id").get<std::string>(), c.at("name").get<std::string>(), {}});
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedFile, cat_path.string() + ": " + e.what());
    }
  } else {
    write_categories({});
  }
  std::sort(snap->categories.begin(), snap->categories.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  snap->products = parse_index<ProductRecord>(root_ / kProductsFile);
  snap->potentials = parse_index<PotentialRecord>(root_ / kPotentialsFile);
  publish(std::move(snap));
}

void CatalogStore::write_categories(const std::vector<CategoryRecord>& cats) const {
  json list = json::array();
  for (const auto& c : cats) list.push_back({{"id", c.id}, {"name", c.name}});
  const std::string text = json{{"version", kCategoriesVersion}, {"categories", list}}.dump(2) + "\n";
  write_file_atomic(root_ / kCategoriesFile,
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::shared_ptr<const CatalogSnapshot> CatalogStore::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void CatalogStore::publish(std::shared_ptr<const CatalogSnapshot> snap) {
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

std::string CatalogStore::next_id(char prefix) {
  // <prefix><16-digit microseconds>-<6 hex>; the clock reading is forced
  // strictly increasing so ids sort in insertion order.
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto now = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  last_id_micros_ = std::max(now, last_id_micros_ + 1);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%c%016llu-%06llx", prefix,
                static_cast<unsigned long long>(last_id_micros_),
                static_cast<unsigned long long>(rng() & 0xffffffULL));
  return buf;
}

void CatalogStore::add_category(const std::string& id, const std::string& name) {
  if (!is_safe_id(id)) throw Error(ErrorCode::kInvalidArgument, "invalid category id '" + id + "'");
  std::lock_guard guard(write_mutex_);
  auto snap = std::make_shared<CatalogSnapshot>(*snapshot());
  if (snap->has_category(id)) throw Error(ErrorCode::kDuplicateId, "category '" + id + "' exists");
  snap->categories.push_back({id, name.empty() ? id : name, {}});
  std::sort(snap->categories.begin(), snap->categories.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  write_categories(snap->categories);
  publish(std::move(snap));
}

void CatalogStore::ensure_category(const std::string& id, const std::string& name) {
  if (snapshot()->has_category(id)) return;
  try {
    add_category(id, name);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDuplicateId) throw;
  }
}

std::string CatalogStore::put_product(ProductRecord rec, const ImageBuffer& image) {
  std::lock_guard guard(write_mutex_);
  auto snap = std::make_shared<CatalogSnapshot>(*snapshot());
  if (rec.category.empty() || !snap->has_category(rec.category)) {
    throw Error(ErrorCode::kUnknownCategory, "unknown category '" + rec.category + "'");
  }
  if (rec.id.empty()) {
    rec.id = next_id('p');
  } else if (!is_safe_id(rec.id)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid product id '" + rec.id + "'");
  }
  if (snap->find_product(rec.id)) {
    throw Error(ErrorCode::kDuplicateId, "product '" + rec.id + "' already exists");
  }
  rec.metadata.category = rec.category;
  rec.image_path = "images/" + rec.id + ".png";
  if (rec.registered_at.empty()) rec.registered_at = now_iso8601();

  save_png(root_ / rec.image_path, image);
  append_line(root_ / kProductsFile, json(rec).dump());

  auto ptr = std::make_shared<const ProductRecord>(std::move(rec));
  const auto pos = find_by_id(snap->products, ptr->id);
  snap->products.insert(pos, ptr);
  publish(std::move(snap));
  return ptr->id;
}

ProductRecord CatalogStore::get_product(const std::string& id) const {
  const auto snap = snapshot();
  const ProductRecord* p = snap->find_product(id);
  if (!p) throw Error(ErrorCode::kNotFound, "no product '" + id + "'");
  return *p;
}

std::vector<ProductRecord> CatalogStore::list_products() const {
  const auto snap = snapshot();
  std::vector<ProductRecord> out;
  out.reserve(snap->products.size());
  for (const auto& p : snap->products) out.push_back(*p);
  return out;
}

std::vector<ProductRecord> CatalogStore::list_by_category(const std::string& category) const {
  const auto snap = snapshot();
  if (!snap->has_category(category)) {
    throw Error(ErrorCode::kNotFound, "no category '" + category + "'");
  }
  std::vector<ProductRecord> out;
  for (const auto& p : snap->products) {
    if (p->category == category) out.push_back(*p);
  }
  return out;
}

std::vector<CategoryRecord> CatalogStore::list_categories() const {
  const auto snap = snapshot();
  std::vector<CategoryRecord> out = snap->categories;
  for (auto& c : out) {
    std::vector<const Metadata*> members;
    for (const auto& p : snap->products) {
      if (p->category == c.id) members.push_back(&p->metadata);
    }
    if (!members.empty()) c.centroid = mean_descriptor(members);
  }
  return out;
}

std::size_t CatalogStore::product_count() const { return snapshot()->products.size(); }

std::vector<std::uint8_t> CatalogStore::product_image_bytes(const std::string& id) const {
  const ProductRecord rec = get_product(id);
  return read_file(root_ / rec.image_path);
}

ImageBuffer CatalogStore::load_product_image(const std::string& id) const {
  return decode_image(product_image_bytes(id));
}

std::string CatalogStore::put_potential(const Metadata& m, std::optional<std::string> matched) {
  std::lock_guard guard(write_mutex_);
  auto snap = std::make_shared<CatalogSnapshot>(*snapshot());
  PotentialRecord rec{next_id('q'), m, std::move(matched), now_iso8601()};
  append_line(root_ / kPotentialsFile, json(rec).dump());
  auto ptr = std::make_shared<const PotentialRecord>(std::move(rec));
  snap->potentials.insert(find_by_id(snap->potentials, ptr->id), ptr);
  publish(std::move(snap));
  return ptr->id;
}

std::vector<PotentialRecord> CatalogStore::list_potentials() const {
  const auto snap = snapshot();
  std::vector<PotentialRecord> out;
  for (const auto& p : snap->potentials) out.push_back(*p);
  return out;
}

}  // namespace occu
