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

// Helpers and independent reference implementations shared by the unit
// tests and the acceptance binary. None of the oracles call into the code
// paths they check.

#ifndef SHAPEFIT_TESTS_SUPPORT_HPP
#define SHAPEFIT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "shapefit/geometry.hpp"
#include "shapefit/image.hpp"
#include "shapefit/pixel_features.hpp"
#include "shapefit/random.hpp"
#include "shapefit/shape_model.hpp"
#include "shapefit/synthetic.hpp"

namespace shapefit::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("shapefit_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline GrayImage random_image(Rng& rng, int w, int h) {
  GrayImage img(w, h);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.index(256));
  return img;
}

inline LandmarkShape random_shape(Rng& rng, std::size_t n, double lo = 0.0, double hi = 10.0) {
  std::vector<Point> pts(n);
  for (auto& p : pts) p = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
  return LandmarkShape(std::move(pts));
}

// ---- integral image / Haar oracles ----

inline std::int64_t naive_rect_sum(const GrayImage& img, int x0, int y0, int w, int h) {
  std::int64_t s = 0;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) s += img.at(x, y);
  return s;
}

/// Edge-repeating reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
inline int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

inline GrayImage explicit_pad(const GrayImage& img, int pad) {
  GrayImage out(img.width + 2 * pad, img.height + 2 * pad);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = img.at(reflect(x - pad, img.width), reflect(y - pad, img.height));
  return out;
}

/// Per-pixel membership: +1 positive region, -1 negative region.
inline int haar_membership(HaarKind kind, int n, int dx, int dy) {
  const int r = n / 2;
  switch (kind) {
    case HaarKind::edge_horizontal: return dy <= 0 ? 1 : -1;
    case HaarKind::edge_vertical: return dx <= 0 ? 1 : -1;
    case HaarKind::line_horizontal: return std::abs(dy) <= n / 9 ? 1 : -1;
    case HaarKind::line_vertical: return std::abs(dx) <= n / 9 ? 1 : -1;
    case HaarKind::center_surround:
      return (std::abs(dx) < r && std::abs(dy) < r) ? 1 : -1;
  }
  return 0;
}

/// Mean(positive) - mean(negative), walking pixels of an explicitly padded copy.
inline double naive_haar(const GrayImage& padded, int pad, HaarKind kind, int n, int cx, int cy) {
  const int r = n / 2;
  double pos = 0, neg = 0;
  int npos = 0, nneg = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double v = padded.at(cx + pad + dx, cy + pad + dy);
      if (haar_membership(kind, n, dx, dy) > 0) {
        pos += v;
        ++npos;
      } else {
        neg += v;
        ++nneg;
      }
    }
  return pos / npos - neg / nneg;
}

// ---- symmetric eigen oracle (cyclic Jacobi) ----

struct EigenPairs {
  std::vector<double> values;                 ///< descending
  std::vector<std::vector<double>> vectors;   ///< vectors[i] pairs with values[i]
};

inline EigenPairs jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  EigenPairs out;
  for (auto i : order) {
    out.values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

/// Sample covariance (1/(N-1)) of interleaved x0,y0,x1,y1,... vectors.
inline std::vector<std::vector<double>> naive_covariance(const std::vector<LandmarkShape>& shapes) {
  const std::size_t d = 2 * shapes.front().size();
  std::vector<double> mean(d, 0.0);
  auto coord = [](const LandmarkShape& s, std::size_t k) { return k % 2 ? s[k / 2].y : s[k / 2].x; };
  for (const auto& s : shapes)
    for (std::size_t k = 0; k < d; ++k) mean[k] += coord(s, k) / static_cast<double>(shapes.size());
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& s : shapes)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        c[i][j] += (coord(s, i) - mean[i]) * (coord(s, j) - mean[j]) /
                   static_cast<double>(shapes.size() - 1);
  return c;
}

// ---- forest traversal oracle over the serialized JSON ----

inline double json_tree_value(const nlohmann::json& node, const std::vector<double>& x) {
  const nlohmann::json* n = &node;
  while (!n->contains("leaf")) {
    const auto f = (*n)["feature"].get<std::size_t>();
    n = x[f] <= (*n)["threshold"].get<double>() ? &(*n)["left"] : &(*n)["right"];
  }
  return (*n)["leaf"].get<double>();
}

inline double json_forest_proba(const nlohmann::json& forest, const std::vector<double>& x) {
  double acc = 0.0;
  for (const auto& t : forest["trees"]) acc += json_tree_value(t, x);
  return acc / static_cast<double>(forest["trees"].size());
}

// ---- shape model fixtures ----

/// Landmark outlines of `n` random synthetic bones, without rendering.
inline std::vector<LandmarkShape> bone_shapes(std::size_t n, std::uint64_t seed,
                                              const synth::Config& cfg = {}) {
  std::vector<LandmarkShape> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_stream(seed, i));
    const auto params = synth::random_bone_params(rng, cfg);
    out.emplace_back(synth::resample_closed(synth::bone_outline(params), cfg.landmarks));
  }
  return out;
}

/// Paints 1.0 on every pixel within `radius` of the closed polyline.
template <typename Map>
void paint_outline(Map& map, const LandmarkShape& shape, double radius) {
  const std::size_t L = shape.size();
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      for (std::size_t i = 0; i < L; ++i) {
        const Point a = shape[i], b = shape[(i + 1) % L];
        const Point ab = b - a;
        const double len2 = dot(ab, ab);
        const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
        const Point q = a + t * ab;
        if (norm(p - q) <= radius) {
          map.at(x, y) = 1.0f;
          break;
        }
      }
    }
}

inline double mean_landmark_error(const LandmarkShape& a, const LandmarkShape& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::hypot(a[i].x - b[i].x, a[i].y - b[i].y);
  return acc / static_cast<double>(a.size());
}

}  // namespace shapefit::testing

#endif  // SHAPEFIT_TESTS_SUPPORT_HPP
