// Copyright 2026 The shapefit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPEFIT_COMMANDS_HPP
#define SHAPEFIT_COMMANDS_HPP

// End-to-end batch stages behind the CLI. Each command loads and validates
// all of its inputs, computes in memory, and only then writes outputs, so a
// data error never leaves partial artifacts behind.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapefit/dataset.hpp"
#include "shapefit/de_optimizer.hpp"
#include "shapefit/error.hpp"
#include "shapefit/evaluate.hpp"
#include "shapefit/geometry.hpp"
#include "shapefit/image.hpp"
#include "shapefit/pixel_features.hpp"
#include "shapefit/prob_map.hpp"
#include "shapefit/random.hpp"
#include "shapefit/random_forest.hpp"
#include "shapefit/shape_model.hpp"
#include "shapefit/synthetic.hpp"

namespace shapefit::cli {

namespace fs = std::filesystem;

inline constexpr const char* kShapeModelFile = "shape_model.json";
inline constexpr const char* kForestFile = "forest.json";

inline void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create directory " + p.string() + ": " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

struct SynthOptions {
  std::size_t count = 50;
  int width = 300;
  int height = 150;
  std::size_t train_count = 0;
  std::uint64_t seed = 0;
  fs::path out_dir;
};

inline fs::path cmd_synth(const SynthOptions& o) {
  synth::DatasetOptions d;
  d.count = o.count;
  d.train_count = o.train_count;
  d.image.width = o.width;
  d.image.height = o.height;
  d.seed = derive_seed(o.seed, "synth");
  return synth::generate_synthetic_dataset(d, o.out_dir);
}

struct TrainShapeOptions {
  fs::path manifest;
  fs::path out_dir;
  std::optional<std::size_t> components;
  std::optional<double> variance;
};

inline ShapeModel cmd_train_shape(const TrainShapeOptions& o) {
  if (o.components && o.variance) throw ConfigError("--components and --variance are exclusive");
  const Dataset ds = load_dataset(o.manifest);
  std::vector<LandmarkShape> shapes;
  for (const auto* e : ds.split(Split::train)) shapes.push_back(read_landmarks(*e->landmarks));
  if (shapes.size() < 2) throw DataError("need at least 2 training shapes");
  PcaOptions pca;
  if (o.components) pca.fixed_components = *o.components;
  if (o.variance) pca.variance_cutoff = *o.variance;
  const auto trained = train_shape_model(shapes, pca);
  make_dirs(o.out_dir);
  save_shape_model(o.out_dir / kShapeModelFile, trained.model);
  std::cout << "shape model: L=" << trained.model.landmarks << " k=" << trained.model.components()
            << " variance_retained=" << trained.model.variance_retained
            << " gpa_iterations=" << trained.alignment.iterations << "\n";
  return trained.model;
}

struct TrainClassifierOptions {
  fs::path manifest;
  fs::path out_dir;
  std::size_t trees = 32;
  std::size_t neg_ratio = 4;
  std::size_t min_node = 5;
  std::size_t max_depth = 25;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

inline SampleMatrix to_matrix(std::span<const LabeledSample> samples) {
  SampleMatrix m;
  m.n_features = kFeatureCount;
  m.values.reserve(samples.size() * kFeatureCount);
  m.labels.reserve(samples.size());
  for (const auto& s : samples) m.push_back(s.features, s.label == Label::border);
  return m;
}

inline Forest cmd_train_classifier(const TrainClassifierOptions& o) {
  const Dataset ds = load_dataset(o.manifest);
  std::vector<GrayImage> images, masks;
  for (const auto* e : ds.split(Split::train)) {
    if (!e->mask) throw DataError("training entry " + e->image.string() + " has no mask");
    images.push_back(read_gray_image(e->image));
    masks.push_back(read_gray_image(*e->mask));
  }
  if (images.empty()) throw DataError("manifest has no training entries");
  const auto samples = sample_training_set(images, masks, o.neg_ratio, derive_seed(o.seed, "negatives"));
  ForestParams params;
  params.n_trees = o.trees;
  params.min_node_size = o.min_node;
  params.max_depth = o.max_depth;
  Forest forest = train_forest(to_matrix(samples), params, derive_seed(o.seed, "forest"), o.threads);
  forest.feature_names = haar_feature_names();
  make_dirs(o.out_dir);
  save_forest(o.out_dir / kForestFile, forest);
  std::size_t deepest = 0;
  for (const auto& t : forest.trees) deepest = std::max(deepest, t.depth());
  std::cout << "forest: " << forest.trees.size() << " trees from " << samples.size()
            << " samples, max depth " << deepest << "\n";
  return forest;
}

struct ProbmapOptions {
  fs::path manifest;
  fs::path forest;
  fs::path out_dir;
  bool all_entries = false;  ///< default: test split only
  std::size_t threads = 0;
};

inline std::vector<const DatasetEntry*> selected(const Dataset& ds, bool all) {
  if (!all) return ds.split(Split::test);
  std::vector<const DatasetEntry*> out;
  for (const auto& e : ds.entries) out.push_back(&e);
  return out;
}

/// Maps under out_dir/maps/<name>.pfm with a sidecar naming the forest hash.
inline void cmd_probmap(const ProbmapOptions& o) {
  const Dataset ds = load_dataset(o.manifest);
  const std::string forest_text = read_text_file(o.forest);
  const Forest forest = parse_forest(forest_text);
  const std::string hash = content_hash(forest_text);
  const auto entries = selected(ds, o.all_entries);
  if (entries.empty()) throw DataError("no entries selected for probability maps");
  std::vector<GrayImage> images;
  for (const auto* e : entries) images.push_back(read_gray_image(e->image));
  make_dirs(o.out_dir / "maps");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto map = compute_prob_map(forest, images[i], o.threads);
    save_prob_map(o.out_dir / "maps" / (entries[i]->name() + ".pfm"), map, hash);
  }
  std::cout << "probability maps: " << entries.size() << "\n";
}

struct FitOptions {
  fs::path manifest;
  fs::path model;
  std::optional<fs::path> map_dir;
  std::optional<fs::path> forest;
  std::string strategy = "rand/1/bin";
  double F = 0.5;
  double CR = 0.75;
  std::size_t np = 0;
  std::size_t max_gen = 1500;
  double target_prob = 0.95;
  std::uint64_t seed = 0;
  fs::path out_dir;
  bool all_entries = false;
  std::size_t threads = 0;
};

inline DEConfig de_config(const FitOptions& o) {
  DEConfig c;
  c.strategy = parse_strategy(o.strategy);
  c.F = o.F;
  c.CR = o.CR;
  c.pop_size = o.np;
  c.max_generations = o.max_gen;
  if (!(o.target_prob >= 0.0 && o.target_prob <= 1.0)) throw ConfigError("--target-prob must be in [0, 1]");
  c.target_cost = 1.0 - o.target_prob;
  c.threads = o.threads;
  return c;
}

/// Fits every selected entry. Outputs: fitted/<name>.csv, traces/<name>.csv,
/// overlays/<name>.png and fit_summary.csv.
inline void cmd_fit(const FitOptions& o) {
  if (o.map_dir.has_value() == o.forest.has_value())
    throw ConfigError("fit needs exactly one of --map or --forest");
  DEConfig base = de_config(o);
  const Dataset ds = load_dataset(o.manifest);
  const ShapeModel model = load_shape_model(o.model);
  if (ds.landmark_count != 0 && ds.landmark_count != model.landmarks)
    throw DataError("shape model has " + std::to_string(model.landmarks) +
                    " landmarks but the dataset has " + std::to_string(ds.landmark_count));
  const auto entries = selected(ds, o.all_entries);
  if (entries.empty()) throw DataError("no entries selected for fitting");

  std::optional<Forest> forest;
  std::string forest_hash;
  if (o.forest) {
    const std::string text = read_text_file(*o.forest);
    forest = parse_forest(text);
    forest_hash = content_hash(text);
  }
  std::vector<GrayImage> images;
  std::vector<ProbabilityMap> maps;
  std::vector<bool> fresh;
  for (const auto* e : entries) {
    images.push_back(read_gray_image(e->image));
    if (o.map_dir) {
      maps.push_back(load_prob_map(*o.map_dir / (e->name() + ".pfm")));
      fresh.push_back(false);
    } else {
      auto cached = load_cached_prob_map(o.out_dir / "maps" / (e->name() + ".pfm"), forest_hash);
      fresh.push_back(!cached);
      maps.push_back(cached ? std::move(*cached) : compute_prob_map(*forest, images.back(), o.threads));
    }
    if (maps.back().width != images.back().width || maps.back().height != images.back().height)
      throw DataError("probability map for " + e->name() + " does not match the image size");
  }

  std::vector<FitResult> fits;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    DEConfig c = base;
    c.seed = derive_seed(o.seed, "fit/" + entries[i]->name());
    fits.push_back(fit_shape(maps[i], model, c));
    std::cout << entries[i]->name() << ": likelihood " << fits.back().likelihood << " after "
              << fits.back().optimization.generations << " generations\n";
  }

  for (const char* sub : {"fitted", "traces", "overlays"}) make_dirs(o.out_dir / sub);
  if (forest) make_dirs(o.out_dir / "maps");
  std::string summary = "image,likelihood,generations,reached_target\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string name = entries[i]->name();
    const auto& fit = fits[i];
    if (forest && fresh[i]) save_prob_map(o.out_dir / "maps" / (name + ".pfm"), maps[i], forest_hash);
    write_landmarks(o.out_dir / "fitted" / (name + ".csv"), fit.shape);
    write_trace_csv(o.out_dir / "traces" / (name + ".csv"), fit.optimization.trace);
    std::optional<LandmarkShape> truth;
    if (entries[i]->landmarks) truth = read_landmarks(*entries[i]->landmarks);
    write_png(o.out_dir / "overlays" / (name + ".png"),
              render_overlay(images[i], fit.shape, truth ? &*truth : nullptr));
    summary += name + "," + format_double(fit.likelihood) + "," +
               std::to_string(fit.optimization.generations) + "," +
               (fit.optimization.reached_target ? "1" : "0") + "\n";
  }
  write_text(o.out_dir / "fit_summary.csv", summary);
  auto cfg = to_json(base);
  cfg["seed"] = o.seed;
  write_text(o.out_dir / "fit_config.json", cfg.dump(2) + "\n");
}

struct EvaluateOptions {
  fs::path fitted;  ///< directory of <name>.csv landmark files
  fs::path truth;   ///< directory of landmark files, or a manifest (test entries)
  fs::path out_dir;
};

/// Writes report.csv (per-landmark MSE), image_errors.csv and summary.json.
inline ErrorReport cmd_evaluate(const EvaluateOptions& o) {
  std::vector<std::pair<std::string, fs::path>> truth_files;
  if (fs::is_directory(o.truth)) {
    for (const auto& f : fs::directory_iterator(o.truth))
      if (f.is_regular_file() && f.path().extension() == ".csv")
        truth_files.emplace_back(f.path().stem().string(), f.path());
    std::sort(truth_files.begin(), truth_files.end());
  } else {
    const Dataset ds = load_dataset(o.truth);
    for (const auto* e : ds.split(Split::test))
      if (e->landmarks) truth_files.emplace_back(e->name(), *e->landmarks);
  }
  if (truth_files.empty()) throw DataError("no ground-truth landmark files found");
  if (!fs::is_directory(o.fitted)) throw DataError("--fitted must be a directory: " + o.fitted.string());

  std::vector<std::string> names;
  std::vector<LandmarkShape> fitted, truth;
  for (const auto& [name, path] : truth_files) {
    const fs::path fitted_path = o.fitted / (name + ".csv");
    if (!fs::exists(fitted_path)) throw DataError("no fitted shape for " + name + " in " + o.fitted.string());
    names.push_back(name);
    truth.push_back(read_landmarks(path));
    fitted.push_back(read_landmarks(fitted_path));
  }
  const ErrorReport report = evaluate(fitted, truth);

  make_dirs(o.out_dir);
  write_text(o.out_dir / "report.csv", format_landmark_report(report));
  write_text(o.out_dir / "image_errors.csv", format_image_report(report, names));
  nlohmann::ordered_json s{{"images", names.size()},
                           {"landmarks", report.landmark_mse.size()},
                           {"overall_mse_px2", report.overall_mse},
                           {"mean_image_error_px", report.mean_image_error},
                           {"median_image_error_px", report.median_image_error},
                           {"max_image_error_px", report.max_image_error}};
  write_text(o.out_dir / "summary.json", s.dump(2) + "\n");
  std::cout << "evaluated " << names.size() << " images: mean error " << report.mean_image_error
            << " px, median " << report.median_image_error << " px\n";
  return report;
}

}  // namespace shapefit::cli

#endif  // SHAPEFIT_COMMANDS_HPP
