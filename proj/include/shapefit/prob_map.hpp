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

#ifndef SHAPEFIT_PROB_MAP_HPP
#define SHAPEFIT_PROB_MAP_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "shapefit/error.hpp"
#include "shapefit/geometry.hpp"
#include "shapefit/image.hpp"
#include "shapefit/parallel.hpp"
#include "shapefit/pixel_features.hpp"
#include "shapefit/random_forest.hpp"
#include "shapefit/shape_model.hpp"

namespace shapefit {

/// Per-pixel border probability. Stored in single precision so a map read
/// back from PFM is bit-identical to the one computed in memory.
struct ProbabilityMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  ProbabilityMap() = default;
  ProbabilityMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  float& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;
};

/// Classifier output at every pixel; rows are split across `threads` workers.
inline ProbabilityMap compute_prob_map(const Forest& forest, const GrayImage& img,
                                       std::size_t threads = 0) {
  if (forest.n_features != kFeatureCount)
    throw ParameterError("forest expects " + std::to_string(forest.n_features) +
                         " features, pixel descriptor has " + std::to_string(kFeatureCount));
  if (!forest.feature_names.empty() && forest.feature_names != haar_feature_names())
    throw ParameterError("forest was trained on a different feature catalog");
  const PaddedIntegralImage features(img);
  ProbabilityMap map(img.width, img.height);
  parallel_for(static_cast<std::size_t>(img.height), threads, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < img.width; ++x) {
      const FeatureVector fv = feature_vector(features, x, y);
      map.at(x, y) = static_cast<float>(predict_proba(forest, fv));
    }
  });
  return map;
}

/// Bilinear interpolation between pixel centers; 0 outside [0, w-1] x [0, h-1].
inline double sample_bilinear(const ProbabilityMap& map, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= map.width - 1 && y <= map.height - 1)) return 0.0;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, map.width - 1);
  const int y1 = std::min(y0 + 1, map.height - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1.0 - fx) * map.at(x0, y0) + fx * map.at(x1, y0);
  const double bottom = (1.0 - fx) * map.at(x0, y1) + fx * map.at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

/// Mean map value over the landmarks.
inline double shape_likelihood(const ProbabilityMap& map, const LandmarkShape& shape) {
  if (shape.size() == 0) return 0.0;
  double acc = 0.0;
  for (const Point& p : shape) acc += sample_bilinear(map, p.x, p.y);
  return acc / static_cast<double>(shape.size());
}

inline double shape_cost(const ProbabilityMap& map, const ShapeModel& model,
                         const ShapeParams& params) {
  return 1.0 - shape_likelihood(map, synthesize(model, params));
}

// ---- PFM storage with a sidecar recording the forest that produced it ----

inline FloatImage to_float_image(const ProbabilityMap& map) {
  return {map.width, map.height, map.values};
}

inline ProbabilityMap to_probability_map(FloatImage img) {
  ProbabilityMap map;
  map.width = img.width;
  map.height = img.height;
  map.values = std::move(img.values);
  for (float v : map.values)
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("probability map value outside [0, 1]");
  return map;
}

inline std::string content_hash(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string("fnv1a64:") + buf;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& map_path) {
  auto p = map_path;
  p += ".source";
  return p;
}

inline void save_prob_map(const std::filesystem::path& path, const ProbabilityMap& map,
                          const std::string& forest_hash) {
  write_pfm(path, to_float_image(map));
  std::ofstream side(sidecar_path(path), std::ios::binary);
  if (!side) throw DataError("cannot write " + sidecar_path(path).string());
  side << "forest " << forest_hash << "\n";
}

inline ProbabilityMap load_prob_map(const std::filesystem::path& path) {
  return to_probability_map(read_pfm(path));
}

/// The cached map, if present and produced by a forest with `forest_hash`.
inline std::optional<ProbabilityMap> load_cached_prob_map(const std::filesystem::path& path,
                                                          const std::string& forest_hash) {
  std::ifstream side(sidecar_path(path));
  if (!side || !std::filesystem::exists(path)) return std::nullopt;
  std::string tag, hash;
  side >> tag >> hash;
  if (tag != "forest" || hash != forest_hash) return std::nullopt;
  return load_prob_map(path);
}

}  // namespace shapefit

#endif  // SHAPEFIT_PROB_MAP_HPP
