#include "occu/service.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "occu/canny.hpp"
#include "occu/png_io.hpp"
#include "occu/retrieval.hpp"

namespace occu {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string image_url(const std::string& id) { return "/api/v1/products/" + id + "/image"; }

void send_error(httplib::Response& res, const ApiError& e) {
  res.status = e.status;
  res.set_content(json{{"code", e.code}, {"message", e.message}, {"status", e.status}}.dump(), kJson);
}

ApiError bad_request(std::string message) { return {400, "bad_request", std::move(message)}; }

ApiError status_error(int status) {
  switch (status) {
    case 400: return bad_request("malformed request");
    case 404: return {404, "not_found", "no such resource"};
    case 405: return {405, "bad_request", "method not allowed"};
    case 413: return {413, "too_large", "request body exceeds the upload limit"};
    case 416: return {416, "bad_request", "range not satisfiable"};
    default:
      if (status >= 500) return {status, "internal", "internal server error"};
      return {status, "bad_request", "request rejected"};
  }
}

struct Rejected {
  ApiError error;
};

std::optional<std::string> form_field(const httplib::Request& req, const std::string& key) {
  if (!req.has_file(key)) return std::nullopt;
  return req.get_file_value(key).content;
}

void require_multipart(const httplib::Request& req) {
  if (!req.is_multipart_form_data()) throw Rejected{bad_request("expected multipart/form-data")};
}

int parse_k(const std::optional<std::string>& text, int fallback) {
  if (!text || text->empty()) return fallback;
  int k = 0;
  const auto* end = text->data() + text->size();
  const auto [ptr, ec] = std::from_chars(text->data(), end, k);
  if (ec != std::errc() || ptr != end || k < 1) throw Rejected{bad_request("k must be a positive integer")};
  return k;
}

json match_json(const ProductMatch& m) {
  return json{{"id", m.product.id},
              {"name", m.product.name},
              {"category", m.product.category},
              {"score", m.score},
              {"categoryScore", m.category_score},
              {"imageUrl", image_url(m.product.id)}};
}

json product_json(const ProductRecord& r) {
  json j = r;
  j["imageUrl"] = image_url(r.id);
  return j;
}

}  // namespace

void apply_address(ServiceConfig& cfg, const std::string& addr) {
  const auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? std::string() : addr.substr(0, colon);
  const std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
  int p = -1;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
  if (ec != std::errc() || ptr != port.data() + port.size() || p < 0 || p > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad listen address '" + addr + "' (want host:port)");
  }
  if (!host.empty()) cfg.host = host;
  cfg.port = p;
}

void apply_environment(ServiceConfig& cfg) {
  if (const char* v = std::getenv("OCCU_ADDR"); v && *v) apply_address(cfg, v);
  if (const char* v = std::getenv("OCCU_STORE"); v && *v) cfg.store = v;
  if (const char* v = std::getenv("OCCU_MODEL"); v && *v) cfg.model = v;
  if (const char* v = std::getenv("OCCU_ENGINE"); v && *v) cfg.engine = parse_engine(v);
}

ApiError to_api_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kMalformedFile:
    case ErrorCode::kUnsupportedFormat: return {400, "malformed_image", e.what()};
    case ErrorCode::kShapeMismatch: return {400, "dim_mismatch", e.what()};
    case ErrorCode::kEmptyStore:
    case ErrorCode::kEmptyCentroids: return {409, "empty_store", e.what()};
    case ErrorCode::kUnknownCategory: return {422, "unknown_category", e.what()};
    case ErrorCode::kNotFound: return {404, "not_found", e.what()};
    case ErrorCode::kDuplicateId: return {409, "conflict", e.what()};
    case ErrorCode::kTooLarge: return {413, "too_large", e.what()};
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidSigma:
    case ErrorCode::kInvalidParams:
    case ErrorCode::kEmptyMask: return bad_request(e.what());
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kIOFailure: break;
  }
  return {500, "internal", e.what()};
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

struct Service::Impl {
  CatalogStore& store;
  const ServiceConfig& cfg;
  std::shared_ptr<const PConvModel> model;
  httplib::Server server;

  Impl(CatalogStore& s, const ServiceConfig& c, std::shared_ptr<const PConvModel> m)
      : store(s), cfg(c), model(std::move(m)) {
    server.set_payload_max_length(cfg.max_upload_bytes);
    routes();
  }

  // Every handler funnels through here so library errors become ApiError
  // bodies and nothing escapes to httplib's generic 500 page.
  template <class F>
  httplib::Server::Handler wrap(F fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Rejected& r) {
        send_error(res, r.error);
      } catch (const Error& e) {
        send_error(res, to_api_error(e));
      } catch (const json::exception& e) {
        send_error(res, bad_request(std::string("invalid JSON: ") + e.what()));
      } catch (const std::exception& e) {
        send_error(res, {500, "internal", e.what()});
      }
    };
  }

  ImageBuffer image_part(const httplib::Request& req, const std::string& key) const {
    const auto field = form_field(req, key);
    if (!field) throw Rejected{bad_request("missing '" + key + "' part")};
    return decode_image(as_bytes(*field), cfg.max_dimension);
  }

  std::optional<MaskImage> mask_part(const httplib::Request& req, const ImageBuffer& image) const {
    const auto field = form_field(req, "mask");
    if (!field || field->empty()) return std::nullopt;
    const ImageBuffer m = decode_image(as_bytes(*field), cfg.max_dimension);
    if (m.width() != image.width() || m.height() != image.height()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "mask is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                      " but image is " + std::to_string(image.width()) + "x" +
                      std::to_string(image.height()));
    }
    return MaskImage::from_image(m);
  }

  PipelineOptions pipeline(const httplib::Request& req) const {
    PipelineOptions opts;
    opts.engine = cfg.engine;
    if (const auto e = form_field(req, "engine"); e && !e->empty()) opts.engine = parse_engine(*e);
    opts.model = model.get();
    if (opts.engine == InpaintEngine::kPconv && !opts.model) {
      throw Rejected{bad_request("the pconv engine needs a model; start the server with --model")};
    }
    return opts;
  }

  void routes() {
    server.Get("/healthz", wrap([](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    }));

    server.Post("/api/v1/search", wrap([this](const httplib::Request& req, httplib::Response& res) {
      require_multipart(req);
      const ImageBuffer image = image_part(req, "image");
      const auto mask = mask_part(req, image);
      const int k = parse_k(form_field(req, "k"), cfg.default_k);
      const SearchResult r = search(store, image, mask, k, pipeline(req));
      json matches = json::array();
      for (const auto& m : r.matches) matches.push_back(match_json(m));
      const json body{{"restoredImage", base64_encode(encode_png(r.analysis.restored))},
                      {"preprocMode", to_string(r.analysis.preprocess.mode)},
                      {"steps", r.analysis.preprocess.steps},
                      {"inpainted", r.analysis.inpainted},
                      {"category", r.category.category},
                      {"categoryScore", r.category.score},
                      {"potentialId", r.potential_id},
                      {"matches", std::move(matches)}};
      res.set_content(body.dump(), kJson);
    }));

    server.Post("/api/v1/restore", wrap([this](const httplib::Request& req, httplib::Response& res) {
      require_multipart(req);
      const ImageBuffer image = image_part(req, "image");
      const auto mask = mask_part(req, image);
      const QueryAnalysis a = analyze_query(image, mask, pipeline(req));
      const ImageBuffer edges = a.preprocess.edges ? a.preprocess.edges->to_image()
                                                   : canny(to_grayscale(a.preprocess.output)).to_image();
      const json body{{"preprocessed", base64_encode(encode_png(a.preprocess.output))},
                      {"restored", base64_encode(encode_png(a.restored))},
                      {"edges", base64_encode(encode_png(edges))},
                      {"preprocMode", to_string(a.preprocess.mode)},
                      {"steps", a.preprocess.steps},
                      {"inpainted", a.inpainted},
                      {"width", image.width()},
                      {"height", image.height()}};
      res.set_content(body.dump(), kJson);
    }));

    server.Post("/api/v1/products", wrap([this](const httplib::Request& req, httplib::Response& res) {
      require_multipart(req);
      const ImageBuffer image = image_part(req, "image");
      const auto name = form_field(req, "name");
      if (!name || name->empty()) throw Rejected{bad_request("missing 'name' part")};
      auto category = form_field(req, "category").value_or(kAutoCategory);
      if (category.empty()) category = kAutoCategory;
      PipelineOptions opts;
      opts.model = model.get();
      const ProductRecord rec = register_product(store, image, *name, category, opts);
      res.status = 201;
      res.set_header("Location", "/api/v1/products/" + rec.id);
      res.set_content(product_json(rec).dump(), kJson);
    }));

    server.Get("/api/v1/products", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto list = req.has_param("category")
                            ? store.list_by_category(req.get_param_value("category"))
                            : store.list_products();
      json products = json::array();
      for (const auto& p : list) products.push_back(product_json(p));
      res.set_content(json{{"products", std::move(products)}}.dump(), kJson);
    }));

    server.Get(R"(/api/v1/products/([^/]+))",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(product_json(store.get_product(req.matches[1])).dump(), kJson);
               }));

    server.Get(R"(/api/v1/products/([^/]+)/image)",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const auto bytes = store.product_image_bytes(req.matches[1]);
                 res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
               }));

    server.Get("/api/v1/categories", wrap([this](const httplib::Request&, httplib::Response& res) {
      const auto snap = store.snapshot();
      std::map<std::string, std::size_t> counts;
      for (const auto& p : snap->products) ++counts[p->category];
      json cats = json::array();
      for (const auto& c : store.list_categories()) {
        json j = c;
        j["productCount"] = counts[c.id];
        cats.push_back(std::move(j));
      }
      res.set_content(json{{"categories", std::move(cats)}}.dump(), kJson);
    }));

    server.Post("/api/v1/categories", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const std::string id = body.at("id").get<std::string>();
      const std::string name = body.value("name", id);
      store.add_category(id, name);
      res.status = 201;
      res.set_content(json{{"id", id}, {"name", name}, {"centroid", nullptr}, {"productCount", 0}}.dump(),
                      kJson);
    }));

    if (cfg.static_dir && std::filesystem::is_directory(*cfg.static_dir)) {
      server.set_mount_point("/", cfg.static_dir->string());
    }

    // Statuses produced by httplib itself (unknown route, oversized body,
    // broken multipart) arrive with an empty body.
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, status_error(res.status));
    });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "unhandled exception";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          send_error(res, {500, "internal", what});
        });
  }
};

Service::Service(CatalogStore& store, ServiceConfig cfg, std::shared_ptr<const PConvModel> model)
    : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>(store, cfg_, std::move(model))) {}

Service::~Service() { stop(); }

int Service::bind() {
  const int port = cfg_.port == 0 ? impl_->server.bind_to_any_port(cfg_.host)
                                  : (impl_->server.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
  if (port < 0) {
    throw Error(ErrorCode::kIOFailure,
                "cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
  cfg_.port = port;
  return port;
}

bool Service::listen() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace occu
