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

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "shapefit/commands.hpp"

namespace {

namespace cli = shapefit::cli;

constexpr int kUsageError = 1;
constexpr int kNumericError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapefit: landmark shape localization with a PCA shape model, a random-forest "
               "boundary classifier and Differential Evolution"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir;
  std::string manifest;
  std::size_t threads = 0;
  auto shared = [&](CLI::App* sub, bool needs_manifest) {
    sub->add_option("--seed", seed, "master seed")->capture_default_str();
    sub->add_option("--out-dir", out_dir, "output directory")->required();
    if (needs_manifest) sub->add_option("--manifest", manifest, "dataset manifest")->required();
    sub->add_option("--threads", threads, "worker threads (0 = all)")->capture_default_str();
  };

  cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic landmarked dataset");
  shared(synth_cmd, false);
  synth_cmd->add_option("--count", synth.count, "number of images")->capture_default_str();
  synth_cmd->add_option("--width", synth.width)->capture_default_str();
  synth_cmd->add_option("--height", synth.height)->capture_default_str();
  synth_cmd->add_option("--train-count", synth.train_count, "training images (0 = 60%)");

  cli::TrainShapeOptions shape;
  std::size_t components = 0;
  double variance = 0.0;
  auto* shape_cmd = app.add_subcommand("train-shape", "train the PCA shape model");
  shared(shape_cmd, true);
  auto* comp_opt = shape_cmd->add_option("--components", components, "fixed component count");
  auto* var_opt = shape_cmd->add_option("--variance", variance, "variance fraction to retain");
  comp_opt->excludes(var_opt);

  cli::TrainClassifierOptions rf;
  auto* rf_cmd = app.add_subcommand("train-classifier", "train the boundary-pixel random forest");
  shared(rf_cmd, true);
  rf_cmd->add_option("--trees", rf.trees)->capture_default_str();
  rf_cmd->add_option("--neg-ratio", rf.neg_ratio)->capture_default_str();
  rf_cmd->add_option("--min-node", rf.min_node)->capture_default_str();
  rf_cmd->add_option("--max-depth", rf.max_depth)->capture_default_str();

  cli::ProbmapOptions pm;
  std::string pm_forest;
  auto* pm_cmd = app.add_subcommand("probmap", "compute per-pixel probability maps");
  shared(pm_cmd, true);
  pm_cmd->add_option("--forest", pm_forest)->required();
  pm_cmd->add_flag("--all", pm.all_entries, "all entries instead of the test split");

  cli::FitOptions fit;
  std::string fit_model, fit_map, fit_forest;
  auto* fit_cmd = app.add_subcommand("fit", "fit the shape model to probability maps");
  shared(fit_cmd, true);
  fit_cmd->add_option("--model", fit_model)->required();
  auto* map_opt = fit_cmd->add_option("--map", fit_map, "directory of <name>.pfm maps");
  auto* forest_opt = fit_cmd->add_option("--forest", fit_forest, "compute maps with this forest");
  map_opt->excludes(forest_opt);
  fit_cmd->add_option("--strategy", fit.strategy)->capture_default_str();
  fit_cmd->add_option("--F", fit.F)->capture_default_str();
  fit_cmd->add_option("--CR", fit.CR)->capture_default_str();
  fit_cmd->add_option("--np", fit.np, "population size (0 = 10 * dimension)")->capture_default_str();
  fit_cmd->add_option("--max-gen", fit.max_gen)->capture_default_str();
  fit_cmd->add_option("--target-prob", fit.target_prob)->capture_default_str();
  fit_cmd->add_flag("--all", fit.all_entries, "all entries instead of the test split");

  cli::EvaluateOptions ev;
  std::string ev_fitted, ev_truth;
  auto* ev_cmd = app.add_subcommand("evaluate", "per-landmark error report");
  shared(ev_cmd, false);
  ev_cmd->add_option("--fitted", ev_fitted, "directory of fitted landmark files")->required();
  ev_cmd->add_option("--truth", ev_truth, "ground-truth directory or manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (synth_cmd->parsed()) {
      synth.seed = seed;
      synth.out_dir = out_dir;
      std::cout << "manifest: " << cli::cmd_synth(synth).string() << "\n";
    } else if (shape_cmd->parsed()) {
      shape.manifest = manifest;
      shape.out_dir = out_dir;
      if (*comp_opt) shape.components = components;
      if (*var_opt) shape.variance = variance;
      cli::cmd_train_shape(shape);
    } else if (rf_cmd->parsed()) {
      rf.manifest = manifest;
      rf.out_dir = out_dir;
      rf.seed = seed;
      rf.threads = threads;
      cli::cmd_train_classifier(rf);
    } else if (pm_cmd->parsed()) {
      pm.manifest = manifest;
      pm.forest = pm_forest;
      pm.out_dir = out_dir;
      pm.threads = threads;
      cli::cmd_probmap(pm);
    } else if (fit_cmd->parsed()) {
      fit.manifest = manifest;
      fit.model = fit_model;
      if (*map_opt) fit.map_dir = fit_map;
      if (*forest_opt) fit.forest = fit_forest;
      fit.seed = seed;
      fit.out_dir = out_dir;
      fit.threads = threads;
      cli::cmd_fit(fit);
    } else if (ev_cmd->parsed()) {
      ev.fitted = ev_fitted;
      ev.truth = ev_truth;
      ev.out_dir = out_dir;
      cli::cmd_evaluate(ev);
    }
  } catch (const shapefit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericError;
  }
  return 0;
}
