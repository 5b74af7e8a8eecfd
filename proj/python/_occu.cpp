#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "occu/canny.hpp"
#include "occu/catalog_store.hpp"
#include "occu/error.hpp"
#include "occu/gaussian.hpp"
#include "occu/histogram.hpp"
#include "occu/inpaint.hpp"
#include "occu/metadata.hpp"
#include "occu/png_io.hpp"
#include "occu/preprocess.hpp"
#include "occu/retrieval.hpp"

namespace py = pybind11;
using namespace occu;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ImageBuffer to_image(const U8Array& a) {
  if (a.ndim() == 2) {
    return ImageBuffer(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 1,
                       std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() == 3 && (a.shape(2) == 1 || a.shape(2) == 3)) {
    return ImageBuffer(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                       static_cast<int>(a.shape(2)),
                       std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
  }
  throw Error(ErrorCode::kInvalidArgument, "expected an HxW or HxWx3 uint8 array");
}

U8Array from_image(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() == 3) shape.push_back(3);
  U8Array out(shape);
  std::copy(img.samples().begin(), img.samples().end(), out.mutable_data());
  return out;
}

/// Nonzero = valid pixel.
MaskImage to_mask(const U8Array& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kInvalidArgument, "mask must be an HxW array");
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  for (auto& b : bits) b = b ? 1 : 0;
  return MaskImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(bits));
}

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

PreprocessMode parse_mode(const std::string& mode) {
  if (mode == "color") return PreprocessMode::kColor;
  if (mode == "gray" || mode == "grayscale") return PreprocessMode::kGrayscale;
  throw Error(ErrorCode::kInvalidArgument, "mode must be auto, color or gray(scale)");
}

py::dict match_dict(const ProductMatch& m) {
  py::dict d = to_py(nlohmann::json(m.product));
  d["score"] = m.score;
  d["categoryScore"] = m.category_score;
  return d;
}

class Catalog {
 public:
  explicit Catalog(const std::string& root) : store_(CatalogStore::open(root)) {}

  void add_category(const std::string& id, const std::string& name) {
    store_->add_category(id, name.empty() ? id : name);
  }
  py::object register_product(const U8Array& img, const std::string& name, const std::string& category) {
    return to_py(nlohmann::json(occu::register_product(*store_, to_image(img), name, category)));
  }
  py::dict search(const U8Array& img, const std::optional<U8Array>& mask, int k, const std::string& engine) {
    PipelineOptions opts;
    opts.engine = parse_engine(engine);
    std::optional<MaskImage> m;
    if (mask) m = to_mask(*mask);
    const SearchResult r = occu::search(*store_, to_image(img), m, k, opts);
    py::list matches;
    for (const auto& match : r.matches) matches.append(match_dict(match));
    py::dict out;
    out["matches"] = matches;
    out["category"] = r.category.category;
    out["categoryScore"] = r.category.score;
    out["potentialId"] = r.potential_id;
    out["preprocMode"] = std::string(to_string(r.analysis.preprocess.mode));
    out["inpainted"] = r.analysis.inpainted;
    out["restored"] = from_image(r.analysis.restored);
    return out;
  }
  py::object products() const { return to_py(nlohmann::json(store_->list_products())); }
  py::object categories() const { return to_py(nlohmann::json(store_->list_categories())); }
  U8Array product_image(const std::string& id) const { return from_image(store_->load_product_image(id)); }
  void close() { store_.reset(); }

  CatalogStore& store() {
    if (!store_) throw Error(ErrorCode::kInvalidArgument, "catalog is closed");
    return *store_;
  }

 private:
  std::unique_ptr<CatalogStore> store_;
};

}  // namespace

PYBIND11_MODULE(_occu, m) {
  m.doc() = "Native core of occusearch";

  static py::exception<Error> occu_error(m, "OccuError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(occu_error.ptr())(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(occu_error.ptr(), inst.ptr());
    }
  });

  m.def("decode_png", [](py::bytes data) {
    const std::string s = data;
    return from_image(decode_image(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
  });
  m.def("encode_png", [](const U8Array& img) {
    const auto bytes = encode_png(to_image(img));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("to_grayscale", [](const U8Array& img) { return from_image(to_grayscale(to_image(img))); });
  m.def("gaussian_blur", [](const U8Array& img, double sigma) {
    return from_image(gaussian_blur(to_image(img), gaussian_kernel(sigma)));
  }, py::arg("image"), py::arg("sigma"));
  m.def("canny", [](const U8Array& img, double sigma, double t_low, double t_high) {
    const EdgeMap e = canny(to_image(img), CannyParams{sigma, t_low, t_high});
    py::array_t<bool> out({e.height, e.width});
    std::transform(e.edge.begin(), e.edge.end(), out.mutable_data(), [](std::uint8_t v) { return v != 0; });
    return out;
  }, py::arg("image"), py::arg("sigma") = 1.4, py::arg("t_low") = 80.0, py::arg("t_high") = 140.0);
  m.def("histogram_stretch", [](const U8Array& img) { return from_image(histogram_stretch(to_image(img))); });
  m.def("equalize_color", [](const U8Array& img) { return from_image(equalize_color(to_image(img))); });
  m.def("preprocess", [](const U8Array& img, const std::string& mode) {
    const ImageBuffer in = to_image(img);
    const PreprocessReport r = mode == "auto" ? preprocess_auto(in) : preprocess_with_mode(in, parse_mode(mode));
    return py::make_tuple(from_image(r.output), std::string(to_string(r.mode)), r.steps);
  }, py::arg("image"), py::arg("mode") = "auto");
  m.def("diffusion_inpaint", [](const U8Array& img, const U8Array& mask, int iters, double tol) {
    InpaintRequest req{to_image(img), to_mask(mask)};
    req.diffusion_iters = iters;
    req.diffusion_tol = tol;
    return from_image(diffusion_inpaint(req));
  }, py::arg("image"), py::arg("mask"), py::arg("iters") = 2000, py::arg("tol") = 0.05);
  m.def("metadata", [](const U8Array& img) { return to_py(nlohmann::json(generate_metadata(to_image(img)))); });
  m.def("similarity", [](const U8Array& a, const U8Array& b) {
    return similarity(generate_metadata(to_image(a)), generate_metadata(to_image(b)));
  });

  py::class_<Catalog>(m, "Catalog")
      .def(py::init<const std::string&>(), py::arg("root"))
      .def("add_category", [](Catalog& c, const std::string& id, const std::string& name) {
        c.store();
        c.add_category(id, name);
      }, py::arg("id"), py::arg("name") = "")
      .def("register", [](Catalog& c, const U8Array& img, const std::string& name, const std::string& category) {
        c.store();
        return c.register_product(img, name, category);
      }, py::arg("image"), py::arg("name"), py::arg("category") = std::string(kAutoCategory))
      .def("search", [](Catalog& c, const U8Array& img, const std::optional<U8Array>& mask, int k,
                        const std::string& engine) {
        c.store();
        return c.search(img, mask, k, engine);
      }, py::arg("image"), py::arg("mask") = py::none(), py::arg("k") = 10, py::arg("engine") = "diffusion")
      .def("products", [](Catalog& c) { c.store(); return c.products(); })
      .def("categories", [](Catalog& c) { c.store(); return c.categories(); })
      .def("product_image", [](Catalog& c, const std::string& id) { c.store(); return c.product_image(id); })
      .def("__len__", [](Catalog& c) { return c.store().product_count(); })
      .def("close", &Catalog::close)
      .def("__enter__", [](Catalog& c) -> Catalog& { return c; }, py::return_value_policy::reference)
      .def("__exit__", [](Catalog& c, py::args) { c.close(); });
}
