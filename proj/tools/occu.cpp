#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "occu/bench.hpp"
#include "occu/canny.hpp"
#include "occu/error.hpp"
#include "occu/inpaint.hpp"
#include "occu/metadata.hpp"
#include "occu/png_io.hpp"
#include "occu/preprocess.hpp"
#include "occu/retrieval.hpp"
#include "occu/service.hpp"
#include "occu/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace occu;

namespace {

constexpr int kUsageError = 2;
constexpr int kPipelineError = 1;

std::vector<fs::path> png_files(const fs::path& dir, bool recursive) {
  std::vector<fs::path> out;
  const auto take = [&](const fs::directory_entry& e) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) take(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) take(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kNotFound, dir.string() + " is not a directory");
}

std::shared_ptr<const PConvModel> maybe_model(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const PConvModel>(load_model(path));
}

// File timestamps keep `metadata` output stable for unchanged inputs.
std::string file_time_iso8601(const fs::path& p) {
  const auto sys = std::chrono::file_clock::to_sys(fs::last_write_time(p));
  return iso8601(std::chrono::time_point_cast<std::chrono::system_clock::duration>(sys));
}

struct Globals {
  std::string engine = "diffusion";
  std::string model;
};

void add_engine_flags(CLI::App* cmd, Globals& g) {
  cmd->add_option("--engine", g.engine, "Inpainting engine")
      ->check(CLI::IsMember({"diffusion", "pconv"}))
      ->capture_default_str();
  cmd->add_option("--model", g.model, "Partial-convolution model file (needed by --engine pconv)");
}

PipelineOptions pipeline_from(const Globals& g, std::shared_ptr<const PConvModel>& holder) {
  PipelineOptions opts;
  opts.engine = parse_engine(g.engine);
  holder = maybe_model(g.model);
  opts.model = holder.get();
  if (opts.engine == InpaintEngine::kPconv && !opts.model) {
    throw Error(ErrorCode::kInvalidArgument, "--engine pconv needs --model");
  }
  return opts;
}

int serve(ServiceConfig cfg, const std::string& model_path) {
  auto store = CatalogStore::open(cfg.store);
  auto model = maybe_model(model_path.empty() && cfg.model ? cfg.model->string() : model_path);
  if (cfg.engine == InpaintEngine::kPconv && !model) {
    throw Error(ErrorCode::kInvalidArgument, "engine pconv needs a model (--model or OCCU_MODEL)");
  }

  // Pool threads inherit this mask; the main thread alone waits for signals.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Service svc(*store, cfg, model);
  const int port = svc.bind();
  std::fprintf(stderr, "occu: serving %s on http://%s:%d (engine %s)\n", cfg.store.c_str(),
               cfg.host.c_str(), port, std::string(to_string(cfg.engine)).c_str());
  bool ok = true;
  std::thread server([&] { ok = svc.listen(); });
  int sig = 0;
  sigwait(&set, &sig);
  std::fprintf(stderr, "occu: signal %d, shutting down\n", sig);
  svc.stop();
  server.join();
  return ok ? 0 : kPipelineError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware product image search"};
  app.require_subcommand(1);
  Globals g;

  // preprocess
  std::string in, out, mask_path, mode = "auto", store_root;
  auto* pre = app.add_subcommand("preprocess", "Run the automatic preprocessing stage on one image");
  pre->add_option("input", in, "Input PNG")->required();
  pre->add_option("output", out, "Output PNG")->required();
  pre->add_option("--mode", mode, "auto picks color or grayscale from chroma energy")
      ->check(CLI::IsMember({"auto", "color", "gray"}))
      ->capture_default_str();

  // inpaint
  InpaintRequest defaults;
  int iters = defaults.diffusion_iters;
  double tol = defaults.diffusion_tol;
  auto* inp = app.add_subcommand("inpaint", "Fill masked holes (mask: 0 = hole, 255 = valid)");
  inp->add_option("input", in, "Input PNG")->required();
  inp->add_option("mask", mask_path, "Mask PNG with the input's dimensions")->required();
  inp->add_option("output", out, "Output PNG")->required();
  add_engine_flags(inp, g);
  inp->add_option("--iters", iters, "Diffusion iteration limit")->capture_default_str();
  inp->add_option("--tol", tol, "Diffusion stop threshold, mean absolute change")->capture_default_str();

  // edges
  CannyParams canny_params;
  auto* edges = app.add_subcommand("edges", "Canny edge map as a 0/255 PNG");
  edges->add_option("input", in, "Input PNG")->required();
  edges->add_option("output", out, "Output PNG")->required();
  edges->add_option("--tlow", canny_params.t_low, "Low hysteresis threshold")->capture_default_str();
  edges->add_option("--thigh", canny_params.t_high, "High hysteresis threshold")->capture_default_str();
  edges->add_option("--sigma", canny_params.sigma, "Gaussian sigma")->capture_default_str();

  // metadata
  auto* meta = app.add_subcommand("metadata", "Print the image descriptor as JSON");
  meta->add_option("input", in, "Input PNG")->required();

  // index
  std::string corpus_dir;
  auto* index = app.add_subcommand("index", "Register every <dir>/<category>/*.png into a store");
  index->add_option("dir", corpus_dir, "Corpus directory; subdirectory names become categories")
      ->required();
  index->add_option("--store", store_root, "Store root")->required();

  // search
  int k = 5;
  std::string restored_out;
  auto* srch = app.add_subcommand("search", "Rank catalog products against a query image");
  srch->add_option("input", in, "Query PNG")->required();
  srch->add_option("--store", store_root, "Store root")->required();
  srch->add_option("--mask", mask_path, "Occlusion mask PNG");
  srch->add_option("--k", k, "Number of matches")->check(CLI::PositiveNumber)->capture_default_str();
  srch->add_option("--restored-out", restored_out, "Also write the restored query PNG here");
  add_engine_flags(srch, g);

  // serve
  ServiceConfig scfg;
  std::string addr, static_dir;
  auto* srv = app.add_subcommand(
      "serve", "Run the HTTP API (env: OCCU_ADDR, OCCU_STORE, OCCU_MODEL, OCCU_ENGINE)");
  srv->add_option("--addr", addr, "Listen address host:port (default 127.0.0.1:8080)");
  srv->add_option("--store", store_root, "Store root (default ./catalog)");
  srv->add_option("--model", g.model, "Partial-convolution model file");
  srv->add_option("--engine", g.engine, "Default inpainting engine")
      ->check(CLI::IsMember({"diffusion", "pconv"}));
  srv->add_option("--static", static_dir, "Directory served under / (web UI bundle)");

  // bench
  double hole_frac = 0.2;
  std::uint64_t seed = 7;
  std::string json_out;
  auto* bench = app.add_subcommand("bench", "Top-1 category accuracy, pipeline vs raw, on damaged queries");
  bench->add_option("--store", store_root, "Store root")->required();
  bench->add_option("--hole-frac", hole_frac, "Hole area fraction per query")
      ->check(CLI::Range(0.0, 0.95))
      ->capture_default_str();
  bench->add_option("--seed", seed, "Damage seed")->capture_default_str();
  bench->add_option("--json-out", json_out, "Write the JSON report to a file instead of stdout");
  add_engine_flags(bench, g);

  // synth-corpus
  int per_category = 10, size = 64;
  auto* synth = app.add_subcommand("synth-corpus", "Write the seeded 4-category synthetic corpus");
  synth->add_option("dir", corpus_dir, "Output directory")->required();
  synth->add_option("--per-category", per_category, "Images per category")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--size", size, "Image side in pixels")->check(CLI::Range(8, 4096))->capture_default_str();

  // train-toy
  int epochs = 50, channels = 3;
  double lr = 0.5;
  std::uint64_t init_seed = 1;
  auto* train = app.add_subcommand("train-toy", "Gradient-descent training on synthetic holes");
  train->add_option("--corpus", corpus_dir, "Directory of same-size PNGs (searched recursively)")
      ->required();
  train->add_option("--out", out, "Model output file")->required();
  train->add_option("--epochs", epochs, "Full-batch epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--lr", lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--seed", seed, "Hole-placement seed")->capture_default_str();
  train->add_option("--init-seed", init_seed, "Weight initialization seed")->capture_default_str();
  train->add_option("--channels", channels, "Model image channels")
      ->check(CLI::IsMember({1, 3}))
      ->capture_default_str();
  train->add_option("--model", g.model, "Start from this model instead of a fresh one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*pre) {
      const ImageBuffer img = load_image(in);
      const PreprocessReport r =
          mode == "auto" ? preprocess_auto(img)
                         : preprocess_with_mode(img, mode == "color" ? PreprocessMode::kColor
                                                                     : PreprocessMode::kGrayscale);
      save_png(out, r.output);
      std::string steps;
      for (const auto& s : r.steps) steps += (steps.empty() ? "" : ",") + s;
      std::printf("mode=%s steps=%s\n", std::string(to_string(r.mode)).c_str(), steps.c_str());
    } else if (*inp) {
      std::shared_ptr<const PConvModel> holder;
      const PipelineOptions opts = pipeline_from(g, holder);
      InpaintRequest req{load_image(in), load_mask(mask_path), opts.engine, iters, tol};
      if (opts.engine == InpaintEngine::kPconv) {
        req.image = holder->image_channels == 3 ? to_rgb(req.image) : to_grayscale(req.image);
      }
      save_png(out, inpaint(req, holder.get()));
    } else if (*edges) {
      save_png(out, canny(to_grayscale(load_image(in)), canny_params).to_image());
    } else if (*meta) {
      Metadata m = generate_metadata(load_image(in));
      m.created_at = file_time_iso8601(in);
      std::cout << json(m).dump(2) << "\n";
    } else if (*index) {
      require_dir(corpus_dir);
      auto store = CatalogStore::open(store_root);
      std::vector<fs::path> dirs;
      for (const auto& e : fs::directory_iterator(corpus_dir)) {
        if (e.is_directory()) dirs.push_back(e.path());
      }
      std::sort(dirs.begin(), dirs.end());
      std::size_t added = 0;
      for (const auto& dir : dirs) {
        const std::string category = dir.filename().string();
        store->ensure_category(category, category);
        for (const auto& file : png_files(dir, false)) {
          register_product(*store, load_image(file), file.stem().string(), category);
          ++added;
        }
      }
      std::printf("indexed %zu products in %zu categories; store has %zu products\n", added,
                  dirs.size(), store->product_count());
    } else if (*srch) {
      std::shared_ptr<const PConvModel> holder;
      const PipelineOptions opts = pipeline_from(g, holder);
      auto store = CatalogStore::open(store_root, false);
      std::optional<MaskImage> mask;
      if (!mask_path.empty()) mask = load_mask(mask_path);
      const SearchResult r = search(*store, load_image(in), mask, k, opts);
      if (!restored_out.empty()) save_png(restored_out, r.analysis.restored);
      json matches = json::array();
      for (const auto& m : r.matches) {
        matches.push_back({{"id", m.product.id},
                           {"name", m.product.name},
                           {"category", m.product.category},
                           {"score", m.score},
                           {"categoryScore", m.category_score}});
      }
      std::cout << json{{"category", r.category.category},
                        {"categoryScore", r.category.score},
                        {"preprocMode", to_string(r.analysis.preprocess.mode)},
                        {"inpainted", r.analysis.inpainted},
                        {"potentialId", r.potential_id},
                        {"matches", std::move(matches)}}
                       .dump(2)
                << "\n";
    } else if (*srv) {
      apply_environment(scfg);
      if (!addr.empty()) apply_address(scfg, addr);
      if (!store_root.empty()) scfg.store = store_root;
      if (srv->count("--engine")) scfg.engine = parse_engine(g.engine);
      if (!static_dir.empty()) scfg.static_dir = static_dir;
      return serve(scfg, g.model);
    } else if (*bench) {
      std::shared_ptr<const PConvModel> holder;
      const PipelineOptions opts = pipeline_from(g, holder);
      auto store = CatalogStore::open(store_root, false);
      const BenchReport r = run_bench(*store, hole_frac, seed, opts);
      const std::string doc = json(r).dump(2) + "\n";
      if (json_out.empty()) {
        std::cout << doc;
      } else {
        write_file_atomic(json_out, {reinterpret_cast<const std::uint8_t*>(doc.data()), doc.size()});
      }
      std::cout << format_table(r);
    } else if (*synth) {
      for (const auto& item : make_synthetic_corpus(per_category, seed, size)) {
        const fs::path dir = fs::path(corpus_dir) / item.category;
        fs::create_directories(dir);
        save_png(dir / (item.name + ".png"), item.image);
      }
      std::printf("wrote %d images in 4 categories under %s\n", 4 * per_category, corpus_dir.c_str());
    } else if (*train) {
      require_dir(corpus_dir);
      std::vector<ImageBuffer> corpus;
      for (const auto& f : png_files(corpus_dir, true)) corpus.push_back(load_image(f));
      const PConvModel start = g.model.empty() ? default_model(channels, init_seed) : load_model(g.model);
      TrainOptions topts;
      topts.seed = seed;
      const TrainResult r = train_toy(start, corpus, epochs, lr, topts);
      save_model(out, r.model);
      for (std::size_t i = 0; i < r.losses.size(); ++i) {
        std::printf("epoch %3zu  loss %.6f\n", i, r.losses[i]);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "occu: %s\n", e.what());
    return kPipelineError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "occu: %s\n", e.what());
    return kPipelineError;
  }
  return 0;
}
