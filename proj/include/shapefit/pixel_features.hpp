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

#ifndef SHAPEFIT_PIXEL_FEATURES_HPP
#define SHAPEFIT_PIXEL_FEATURES_HPP

#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shapefit/error.hpp"
#include "shapefit/image.hpp"
#include "shapefit/random.hpp"

namespace shapefit {

/// (width+1) x (height+1) cumulative sums; entry (i, j) is the sum of all
/// pixels with column < i and row < j.
class IntegralImage {
 public:
  IntegralImage() = default;

  explicit IntegralImage(const GrayImage& img)
      : width_(img.width), height_(img.height),
        sums_(static_cast<std::size_t>(img.width + 1) * static_cast<std::size_t>(img.height + 1), 0) {
    for (int y = 0; y < height_; ++y) {
      std::int64_t row = 0;
      for (int x = 0; x < width_; ++x) {
        row += img.at(x, y);
        ref(x + 1, y + 1) = ref(x + 1, y) + row;
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::int64_t at(int i, int j) const {
    return sums_[static_cast<std::size_t>(j) * static_cast<std::size_t>(width_ + 1) +
                 static_cast<std::size_t>(i)];
  }

  /// Exact sum of the w x h block with top-left pixel (x0, y0).
  std::int64_t rect_sum(int x0, int y0, int w, int h) const {
    if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > width_ || y0 + h > height_)
      throw BoundsError("rectangle (" + std::to_string(x0) + "," + std::to_string(y0) + "," +
                        std::to_string(w) + "x" + std::to_string(h) + ") outside " +
                        std::to_string(width_) + "x" + std::to_string(height_) + " image");
    return unchecked_sum(x0, y0, w, h);
  }

  std::int64_t unchecked_sum(int x0, int y0, int w, int h) const {
    return at(x0 + w, y0 + h) - at(x0, y0 + h) - at(x0 + w, y0) + at(x0, y0);
  }

 private:
  std::int64_t& ref(int i, int j) {
    return sums_[static_cast<std::size_t>(j) * static_cast<std::size_t>(width_ + 1) +
                 static_cast<std::size_t>(i)];
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> sums_;
};

inline IntegralImage integral_image(const GrayImage& img) { return IntegralImage(img); }

inline std::int64_t rect_sum(const IntegralImage& ii, int x0, int y0, int w, int h) {
  return ii.rect_sum(x0, y0, w, h);
}

/// Symmetric reflection (edge pixel repeated) of an arbitrary index into [0, n).
inline int mirror_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

inline GrayImage mirror_pad(const GrayImage& img, int pad) {
  GrayImage out(img.width + 2 * pad, img.height + 2 * pad);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = img.at(mirror_index(x - pad, img.width), mirror_index(y - pad, img.height));
  return out;
}

enum class HaarKind { edge_horizontal, edge_vertical, line_horizontal, line_vertical, center_surround };

inline std::string_view to_string(HaarKind k) {
  switch (k) {
    case HaarKind::edge_horizontal: return "edge_horizontal";
    case HaarKind::edge_vertical: return "edge_vertical";
    case HaarKind::line_horizontal: return "line_horizontal";
    case HaarKind::line_vertical: return "line_vertical";
    case HaarKind::center_surround: return "center_surround";
  }
  return "unknown";
}

struct HaarFeature {
  HaarKind kind;
  int window;  ///< odd side length, 3..9

  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

inline constexpr std::size_t kFeatureCount = 14;
inline constexpr int kMaxWindowRadius = 4;

using FeatureVector = std::array<double, kFeatureCount>;

/// Fixed catalog; its order defines feature-vector indices.
inline constexpr std::array<HaarFeature, kFeatureCount> haar_catalog() {
  return {{
      {HaarKind::edge_horizontal, 3}, {HaarKind::edge_horizontal, 5},
      {HaarKind::edge_horizontal, 7}, {HaarKind::edge_horizontal, 9},
      {HaarKind::edge_vertical, 3},   {HaarKind::edge_vertical, 5},
      {HaarKind::edge_vertical, 7},   {HaarKind::edge_vertical, 9},
      {HaarKind::center_surround, 3}, {HaarKind::center_surround, 5},
      {HaarKind::center_surround, 7}, {HaarKind::center_surround, 9},
      {HaarKind::line_horizontal, 9}, {HaarKind::line_vertical, 9},
  }};
}

/// "<kind>/<window>" for each catalog entry, in feature order.
inline std::vector<std::string> haar_feature_names() {
  std::vector<std::string> out;
  for (const auto& f : haar_catalog()) out.push_back(std::string(to_string(f.kind)) + "/" + std::to_string(f.window));
  return out;
}

/// Integral image of the image mirror-padded by the largest window radius,
/// so every original pixel has a full window.
struct PaddedIntegralImage {
  IntegralImage ii;
  int pad = kMaxWindowRadius;
  int width = 0;   ///< original image
  int height = 0;  ///< original image

  PaddedIntegralImage() = default;
  explicit PaddedIntegralImage(const GrayImage& img)
      : ii(mirror_pad(img, kMaxWindowRadius)), width(img.width), height(img.height) {}
};

/// Axis-aligned block in window-local offsets relative to the center pixel.
struct Block {
  int dx0, dy0, w, h;
  int area() const { return w * h; }
};

/// Positive region, and the negative region expressed as "window minus X"
/// when `negative_is_complement`, otherwise as an explicit block.
struct HaarRegions {
  Block window;
  Block positive;
  Block negative;
  bool negative_is_complement;
};

/// Middle band of a line feature: odd height closest to a third of the window.
inline int line_band(int window) { return std::max(1, (window / 3) | 1); }

inline HaarRegions haar_regions(const HaarFeature& f) {
  const int n = f.window;
  const int r = n / 2;
  const Block window{-r, -r, n, n};
  switch (f.kind) {
    case HaarKind::edge_horizontal:  // top half incl. center row vs bottom
      return {window, {-r, -r, n, r + 1}, {-r, 1, n, r}, false};
    case HaarKind::edge_vertical:  // left half incl. center column vs right
      return {window, {-r, -r, r + 1, n}, {1, -r, r, n}, false};
    case HaarKind::line_horizontal: {
      const int m = line_band(n);
      return {window, {-r, -m / 2, n, m}, {0, 0, 0, 0}, true};
    }
    case HaarKind::line_vertical: {
      const int m = line_band(n);
      return {window, {-m / 2, -r, m, n}, {0, 0, 0, 0}, true};
    }
    case HaarKind::center_surround:  // inner block vs 1-px ring
      return {window, {-r + 1, -r + 1, n - 2, n - 2}, {0, 0, 0, 0}, true};
  }
  throw ConfigError("unknown Haar kind");
}

/// Mean(positive) - mean(negative) at padded-frame center (px, py).
inline double haar_response(const IntegralImage& ii, const HaarFeature& f, int px, int py) {
  const HaarRegions reg = haar_regions(f);
  auto sum = [&](const Block& b) {
    return static_cast<double>(ii.unchecked_sum(px + b.dx0, py + b.dy0, b.w, b.h));
  };
  const double pos = sum(reg.positive);
  const double pos_mean = pos / reg.positive.area();
  double neg_mean = 0.0;
  if (reg.negative_is_complement) {
    neg_mean = (sum(reg.window) - pos) / (reg.window.area() - reg.positive.area());
  } else {
    neg_mean = sum(reg.negative) / reg.negative.area();
  }
  return pos_mean - neg_mean;
}

/// 14 responses of the catalog centered at original-image pixel (cx, cy).
inline FeatureVector feature_vector(const PaddedIntegralImage& img, int cx, int cy) {
  if (cx < 0 || cy < 0 || cx >= img.width || cy >= img.height)
    throw BoundsError("feature center (" + std::to_string(cx) + "," + std::to_string(cy) +
                      ") outside image");
  static constexpr auto catalog = haar_catalog();
  FeatureVector out{};
  for (std::size_t i = 0; i < catalog.size(); ++i)
    out[i] = haar_response(img.ii, catalog[i], cx + img.pad, cy + img.pad);
  return out;
}

enum class Label : std::uint8_t { background = 0, border = 1 };

struct LabeledSample {
  FeatureVector features;
  Label label;
};

inline bool is_border(std::uint8_t mask_value) { return mask_value != 0; }

/// One sample per border pixel plus `neg_ratio` times as many background
/// pixels drawn uniformly without replacement, per image. Image i draws from
/// stream i of `seed`.
inline std::vector<LabeledSample> sample_training_set(std::span<const GrayImage> images,
                                                      std::span<const GrayImage> masks,
                                                      std::size_t neg_ratio, std::uint64_t seed) {
  if (images.size() != masks.size()) throw DataError("image and mask counts differ");
  std::vector<LabeledSample> samples;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const GrayImage& img = images[i];
    const GrayImage& mask = masks[i];
    if (img.width != mask.width || img.height != mask.height)
      throw DataError("mask " + std::to_string(i) + " does not match its image dimensions");
    std::vector<std::uint32_t> border, background;
    for (std::size_t p = 0; p < mask.pixels.size(); ++p)
      (is_border(mask.pixels[p]) ? border : background).push_back(static_cast<std::uint32_t>(p));
    if (border.empty()) throw DataError("mask " + std::to_string(i) + " has no border pixels");

    const std::size_t wanted = std::min(background.size(), neg_ratio * border.size());
    Rng rng(derive_stream(seed, i));
    for (std::size_t k = 0; k < wanted; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.index(background.size() - k));
      std::swap(background[k], background[j]);
    }

    const PaddedIntegralImage features(img);
    auto emit = [&](std::uint32_t p, Label label) {
      const int x = static_cast<int>(p % static_cast<std::uint32_t>(img.width));
      const int y = static_cast<int>(p / static_cast<std::uint32_t>(img.width));
      samples.push_back({feature_vector(features, x, y), label});
    };
    for (auto p : border) emit(p, Label::border);
    for (std::size_t k = 0; k < wanted; ++k) emit(background[k], Label::background);
  }
  return samples;
}

}  // namespace shapefit

#endif  // SHAPEFIT_PIXEL_FEATURES_HPP
