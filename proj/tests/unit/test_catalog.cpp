#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "occu/catalog_store.hpp"
#include "occu/error.hpp"
#include "occu/png_io.hpp"
#include "temp_dir.hpp"

using namespace occu;
using testing_util::TempDir;

namespace {

ImageBuffer random_rgb(int w, int h, std::mt19937_64& rng) {
  ImageBuffer img(w, h, 3);
  for (auto& s : img.data()) s = static_cast<std::uint8_t>(rng() >> 56);
  return img;
}

ProductRecord record(const std::string& name, const std::string& category, const ImageBuffer& img) {
  ProductRecord r;
  r.name = name;
  r.category = category;
  r.metadata = generate_metadata(img);
  return r;
}

}  // namespace

TEST_CASE("empty store layout") {
  TempDir dir("layout");
  auto store = CatalogStore::open(dir.path() / "s");
  CHECK(std::filesystem::exists(dir.path() / "s" / "categories.json"));
  CHECK(std::filesystem::is_directory(dir.path() / "s" / "images"));
  CHECK(store->product_count() == 0);
  CHECK(store->list_categories().empty());
  CHECK_THROWS_AS(CatalogStore::open(dir.path() / "missing", false), Error);
}

TEST_CASE("one process owns a store directory") {
  TempDir dir("lock");
  auto store = CatalogStore::open(dir.path());
  CHECK_THROWS_AS(CatalogStore::open(dir.path()), Error);
  store.reset();
  CHECK_NOTHROW(CatalogStore::open(dir.path()));
}

TEST_CASE("put and get products") {
  TempDir dir("put");
  std::mt19937_64 rng(51);
  auto store = CatalogStore::open(dir.path());
  store->add_category("bags", "Bags");
  CHECK_THROWS_AS(store->add_category("bags", "Bags"), Error);
  CHECK_NOTHROW(store->ensure_category("bags", "Bags"));

  const ImageBuffer img = random_rgb(12, 8, rng);
  const std::string id = store->put_product(record("tote", "bags", img), img);
  CHECK(store->product_count() == 1);
  const ProductRecord got = store->get_product(id);
  CHECK(got.id == id);
  CHECK(got.name == "tote");
  CHECK(got.category == "bags");
  CHECK(got.metadata.category == std::optional<std::string>("bags"));
  CHECK(got.image_path == "images/" + id + ".png");
  CHECK(store->load_product_image(id) == img);

  try {
    store->put_product(record("x", "hats", img), img);
    FAIL("unknown category accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownCategory);
  }
  ProductRecord dup = record("again", "bags", img);
  dup.id = id;
  try {
    store->put_product(dup, img);
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateId);
  }
  try {
    store->get_product("nope");
    FAIL("missing id found");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
  }
  ProductRecord evil = record("evil", "bags", img);
  evil.id = "../escape";
  CHECK_THROWS_AS(store->put_product(evil, img), Error);
  CHECK(store->product_count() == 1);
}

TEST_CASE("listing order and category partition") {
  TempDir dir("list");
  std::mt19937_64 rng(52);
  auto store = CatalogStore::open(dir.path());
  const std::vector<std::string> cats{"a", "b", "c"};
  for (const auto& c : cats) store->add_category(c, c);
  std::map<std::string, int> expected;
  for (int i = 0; i < 15; ++i) {
    const std::string cat = cats[rng() % 3];
    const ImageBuffer img = random_rgb(4, 4, rng);
    store->put_product(record("p" + std::to_string(i), cat, img), img);
    ++expected[cat];
  }
  const auto all = store->list_products();
  CHECK(all.size() == 15);
  CHECK(std::is_sorted(all.begin(), all.end(), [](auto& x, auto& y) { return x.id < y.id; }));

  std::set<std::string> seen;
  for (const auto& c : cats) {
    const auto members = store->list_by_category(c);
    CHECK(static_cast<int>(members.size()) == expected[c]);
    CHECK(std::is_sorted(members.begin(), members.end(),
                         [](auto& x, auto& y) { return x.id < y.id; }));
    for (const auto& p : members) {
      CHECK(p.category == c);
      CHECK(seen.insert(p.id).second);
    }
  }
  CHECK(seen.size() == 15);
  CHECK_THROWS_AS(store->list_by_category("zzz"), Error);

  for (const auto& c : store->list_categories()) {
    if (expected[c.id] == 0) {
      CHECK_FALSE(c.centroid.has_value());
    } else {
      REQUIRE(c.centroid.has_value());
      CHECK(static_cast<int>(c.centroid->members) == expected[c.id]);
    }
  }
}

TEST_CASE("potentials") {
  TempDir dir("pot");
  auto store = CatalogStore::open(dir.path());
  const Metadata m = generate_metadata(ImageBuffer(4, 4, 3));
  const std::string a = store->put_potential(m, std::nullopt);
  const std::string b = store->put_potential(m, std::string("p1"));
  CHECK(a != b);
  auto list = store->list_potentials();
  REQUIRE(list.size() == 2);
  CHECK(list[0].id == a);
  CHECK_FALSE(list[0].matched_product.has_value());
  CHECK(list[1].matched_product == std::optional<std::string>("p1"));
  store.reset();
  store = CatalogStore::open(dir.path());
  CHECK(store->list_potentials().size() == 2);
}

TEST_CASE("snapshots are immutable views") {
  TempDir dir("snap");
  std::mt19937_64 rng(53);
  auto store = CatalogStore::open(dir.path());
  store->add_category("a", "A");
  const auto before = store->snapshot();
  const ImageBuffer img = random_rgb(4, 4, rng);
  store->put_product(record("n", "a", img), img);
  CHECK(before->products.empty());
  CHECK(store->snapshot()->products.size() == 1);
}

TEST_CASE("persistence: 100 products survive reopen bit-exact") {
  TempDir dir("persist");
  std::mt19937_64 rng(54);
  std::vector<std::pair<std::string, ImageBuffer>> written;
  std::vector<ProductRecord> records;
  {
    auto store = CatalogStore::open(dir.path());
    store->add_category("x", "X");
    store->add_category("y", "Y");
    for (int i = 0; i < 100; ++i) {
      const ImageBuffer img = random_rgb(3 + i % 7, 2 + i % 5, rng);
      const std::string id = store->put_product(record("n" + std::to_string(i), i % 2 ? "x" : "y", img), img);
      written.emplace_back(id, img);
    }
    records = store->list_products();
  }
  auto store = CatalogStore::open(dir.path(), false);
  CHECK(store->product_count() == 100);
  CHECK(store->list_products() == records);
  for (const auto& [id, img] : written) REQUIRE(store->load_product_image(id) == img);
  CHECK(store->list_categories().size() == 2);
}

TEST_CASE("a truncated final index line is ignored") {
  TempDir dir("trunc");
  std::mt19937_64 rng(55);
  std::string keep;
  {
    auto store = CatalogStore::open(dir.path());
    store->add_category("x", "X");
    const ImageBuffer img = random_rgb(4, 4, rng);
    keep = store->put_product(record("ok", "x", img), img);
  }
  {
    std::ofstream out(dir.path() / "products.jsonl", std::ios::app);
    out << R"({"id":"p9","name":"half","categ)";
  }
  {
    std::ofstream out(dir.path() / "potentials.jsonl", std::ios::app);
    out << R"({"id":)";
  }
  auto store = CatalogStore::open(dir.path());
  CHECK(store->product_count() == 1);
  CHECK(store->get_product(keep).name == "ok");
  CHECK(store->list_potentials().empty());

  // Appends after recovery still produce a readable index.
  const ImageBuffer img = random_rgb(4, 4, rng);
  store->put_product(record("next", "x", img), img);
  store.reset();
  CHECK(CatalogStore::open(dir.path())->product_count() == 2);
}

TEST_CASE("is_safe_id") {
  CHECK(is_safe_id("p0001-abc"));
  CHECK(is_safe_id("red_discs.v2"));
  CHECK_FALSE(is_safe_id(""));
  CHECK_FALSE(is_safe_id(".."));
  CHECK_FALSE(is_safe_id("a/b"));
  CHECK_FALSE(is_safe_id("a b"));
}
