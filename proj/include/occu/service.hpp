#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "occu/catalog_store.hpp"
#include "occu/error.hpp"
#include "occu/inpaint.hpp"
#include "occu/pconv.hpp"

namespace occu {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store = "catalog";
  std::optional<std::filesystem::path> model;
  InpaintEngine engine = InpaintEngine::kDiffusion;
  std::optional<std::filesystem::path> static_dir;
  std::size_t max_upload_bytes = 16u << 20;
  int max_dimension = 4096;
  int default_k = 10;
};

/// Parses "host:port" (or ":port", or a bare port) into the config.
void apply_address(ServiceConfig& cfg, const std::string& addr);

/// Overlays OCCU_ADDR, OCCU_STORE, OCCU_MODEL and OCCU_ENGINE when set.
void apply_environment(ServiceConfig& cfg);

struct ApiError {
  int status = 500;
  std::string code;
  std::string message;
};

ApiError to_api_error(const Error& e);

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// HTTP facade over one open catalog store. Handlers run on the server's
/// thread pool; the store provides the reader/writer discipline.
class Service {
 public:
  Service(CatalogStore& store, ServiceConfig cfg, std::shared_ptr<const PConvModel> model = nullptr);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the configured host. Port 0 picks a free port; returns the
  /// bound port or throws kIOFailure.
  int bind();
  /// Serves until stop(); returns false if the listener failed.
  bool listen();
  void stop();
  bool running() const;
  void wait_until_ready() const;

  const ServiceConfig& config() const noexcept { return cfg_; }

 private:
  struct Impl;
  ServiceConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace occu
