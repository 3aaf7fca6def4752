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

#ifndef SHAPEFIT_EVALUATE_HPP
#define SHAPEFIT_EVALUATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "shapefit/error.hpp"
#include "shapefit/format.hpp"
#include "shapefit/geometry.hpp"
#include "shapefit/image.hpp"

namespace shapefit {

struct ErrorReport {
  /// Mean over images of the squared landmark distance, px^2, per landmark.
  std::vector<double> landmark_mse;
  /// Mean landmark distance per image, px.
  std::vector<double> image_mean_error;
  double overall_mse = 0.0;         ///< mean of landmark_mse
  double mean_image_error = 0.0;    ///< mean of image_mean_error
  double median_image_error = 0.0;
  double max_image_error = 0.0;
};

inline ErrorReport evaluate(std::span<const LandmarkShape> fitted,
                            std::span<const LandmarkShape> truth) {
  if (fitted.size() != truth.size())
    throw DataError("fitted and ground-truth shape counts differ (" + std::to_string(fitted.size()) +
                    " vs " + std::to_string(truth.size()) + ")");
  if (fitted.empty()) throw DataError("nothing to evaluate");
  const std::size_t L = truth.front().size();
  ErrorReport r;
  r.landmark_mse.assign(L, 0.0);
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (fitted[i].size() != L || truth[i].size() != L)
      throw DataError("landmark count mismatch for shape " + std::to_string(i));
    double dist = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      const Point d = fitted[i][j] - truth[i][j];
      r.landmark_mse[j] += dot(d, d);
      dist += norm(d);
    }
    r.image_mean_error.push_back(dist / static_cast<double>(L));
  }
  for (double& m : r.landmark_mse) m /= static_cast<double>(fitted.size());
  for (double m : r.landmark_mse) r.overall_mse += m;
  r.overall_mse /= static_cast<double>(L);
  auto sorted = r.image_mean_error;
  std::sort(sorted.begin(), sorted.end());
  for (double e : sorted) r.mean_image_error += e;
  r.mean_image_error /= static_cast<double>(sorted.size());
  const std::size_t n = sorted.size();
  r.median_image_error = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.max_image_error = sorted.back();
  return r;
}

inline std::string format_landmark_report(const ErrorReport& r) {
  std::string out = "landmark,mse_px2\n";
  for (std::size_t j = 0; j < r.landmark_mse.size(); ++j)
    out += std::to_string(j) + "," + format_double(r.landmark_mse[j]) + "\n";
  return out;
}

inline std::string format_image_report(const ErrorReport& r, std::span<const std::string> names) {
  std::string out = "image,mean_error_px\n";
  for (std::size_t i = 0; i < r.image_mean_error.size(); ++i)
    out += (i < names.size() ? names[i] : std::to_string(i)) + "," +
           format_double(r.image_mean_error[i]) + "\n";
  return out;
}

// ---- overlays ----

using Rgb = std::array<std::uint8_t, 3>;

inline void draw_line(RgbImage& img, Point a, Point b, Rgb color) {
  int x0 = static_cast<int>(std::lround(a.x)), y0 = static_cast<int>(std::lround(a.y));
  const int x1 = static_cast<int>(std::lround(b.x)), y1 = static_cast<int>(std::lround(b.y));
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (int guard = 0; guard < 1 << 16; ++guard) {
    img.set(x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

inline void draw_closed_shape(RgbImage& img, const LandmarkShape& s, Rgb color) {
  for (std::size_t i = 0; i < s.size(); ++i) draw_line(img, s[i], s[(i + 1) % s.size()], color);
}

/// Gray image with the annotation (blue, optional) and the fit (red).
inline RgbImage render_overlay(const GrayImage& img, const LandmarkShape& fitted,
                               const LandmarkShape* annotation) {
  RgbImage out(img);
  if (annotation) draw_closed_shape(out, *annotation, {40, 90, 255});
  draw_closed_shape(out, fitted, {255, 40, 40});
  return out;
}

}  // namespace shapefit

#endif  // SHAPEFIT_EVALUATE_HPP
