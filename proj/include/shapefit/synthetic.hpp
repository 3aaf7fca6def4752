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

#ifndef SHAPEFIT_SYNTHETIC_HPP
#define SHAPEFIT_SYNTHETIC_HPP

// Synthetic "bone" radiographs with known landmarks and boundary masks.
//
// Each image holds one bright elongated region whose boundary is a closed
// analytic curve: a bent centerline with a half-width profile that widens at
// both ends (the distal head more than the proximal base). Landmarks are
// equally spaced by arc length, starting at the proximal apex and running
// clockwise on screen (top edge first). Along a fixed landmark range an
// overlapping "shadow" hides the true boundary and puts a false bone-like edge
// a few pixels outside it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "shapefit/dataset.hpp"
#include "shapefit/error.hpp"
#include "shapefit/geometry.hpp"
#include "shapefit/image.hpp"
#include "shapefit/random.hpp"

namespace shapefit::synth {

struct BoneParams {
  double length = 170.0;      ///< apex to apex, px
  double half_width = 16.0;   ///< shaft half-width, px
  double head_factor = 1.5;   ///< distal end widening
  double base_factor = 1.25;  ///< proximal end widening
  double bend = 0.0;          ///< centerline sag at mid-shaft, px
  double rotation = 0.0;      ///< radians
  double cx = 150.0;
  double cy = 75.0;
  double shadow_offset = 10.0;  ///< px from the boundary to the false edge
  /// Local outward bulge (px, may be negative) of the lower edge, centered
  /// under the shadowed landmarks and independent of the rest of the outline.
  double bulge = 0.0;
};

struct Config {
  int width = 300;
  int height = 150;
  std::size_t landmarks = 64;
  double noise_sigma = 8.0;
  /// Landmark index range (inclusive) shadowed by the distractor stripe.
  std::size_t stripe_first = 41;
  std::size_t stripe_last = 51;
  /// The shadow covers the boundary out to a per-image offset drawn from
  /// [shadow_min, shadow_max] px and has a bone-like bright rim at its outer
  /// edge, a false boundary.
  double shadow_min = 6.0;
  double shadow_max = 10.0;
  double stripe_rim = 3.0;
  double stripe_intensity = 150.0;
  double bone_intensity = 150.0;
  double rim_intensity = 185.0;
  int rim_width = 3;
  double background_intensity = 60.0;
};

struct Sample {
  GrayImage image;
  GrayImage mask;
  LandmarkShape landmarks;
  BoneParams params;
};

inline constexpr std::size_t kOutlineSamples = 4096;

/// Documented randomization ranges relative to the image size.
inline BoneParams random_bone_params(Rng& rng, const Config& cfg) {
  BoneParams p;
  p.length = rng.uniform(0.50, 0.63) * cfg.width;
  p.half_width = rng.uniform(0.093, 0.12) * cfg.height;
  p.head_factor = rng.uniform(1.35, 1.60);
  p.base_factor = rng.uniform(1.15, 1.35);
  p.bend = rng.uniform(-0.04, 0.04) * cfg.height;
  p.rotation = rng.uniform(-12.0, 12.0) * std::numbers::pi / 180.0;
  p.cx = cfg.width / 2.0 + rng.uniform(-15.0, 15.0);
  p.cy = cfg.height / 2.0 + rng.uniform(-10.0, 10.0);
  p.shadow_offset = rng.uniform(cfg.shadow_min, cfg.shadow_max);
  p.bulge = rng.uniform(-6.0, 6.0);
  return p;
}

/// Dense closed outline, first point at the proximal apex, clockwise on screen.
inline std::vector<Point> bone_outline(const BoneParams& p, std::size_t samples = kOutlineSamples) {
  const double cr = std::cos(p.rotation), sr = std::sin(p.rotation);
  auto bump = [](double u, double at) { return std::exp(-((u - at) / 0.3) * ((u - at) / 0.3)); };
  std::vector<Point> out;
  out.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
    const double u = -std::cos(t);  // -1 proximal apex, +1 distal apex
    const double s = std::sin(t);   // > 0 on the top edge
    const double profile = p.half_width * (1.0 + (p.head_factor - 1.0) * bump(u, 1.0) +
                                           (p.base_factor - 1.0) * bump(u, -1.0));
    const double lx = 0.5 * p.length * u;
    const double lower = s < 0.0 ? p.bulge * bump(u, 0.2) * std::pow(-s, 0.6) : 0.0;
    const double ly = p.bend * (1.0 - u * u) -
                      profile * std::copysign(std::pow(std::abs(s), 0.6), s) + lower;
    out.push_back({p.cx + cr * lx - sr * ly, p.cy + sr * lx + cr * ly});
  }
  return out;
}

/// Positions of `count` points equally spaced by arc length along a closed
/// polyline, first point at outline[0]. Also returns each point's segment.
inline std::vector<Point> resample_closed(const std::vector<Point>& outline, std::size_t count,
                                          std::vector<std::size_t>* segment_of = nullptr) {
  const std::size_t n = outline.size();
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + norm(outline[(i + 1) % n] - outline[i]);
  const double perimeter = cum[n];
  std::vector<Point> pts;
  pts.reserve(count);
  if (segment_of) segment_of->clear();
  std::size_t seg = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double target = perimeter * static_cast<double>(j) / static_cast<double>(count);
    while (seg + 1 < n && cum[seg + 1] <= target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double f = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    const Point a = outline[seg], b = outline[(seg + 1) % n];
    pts.push_back(a + f * (b - a));
    if (segment_of) segment_of->push_back(seg);
  }
  return pts;
}

namespace detail {

/// Pixel-center scanline fill (even-odd) of a closed polygon.
inline std::vector<std::uint8_t> fill_polygon(const std::vector<Point>& poly, int w, int h) {
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  std::vector<double> xs;
  for (int y = 0; y < h; ++y) {
    xs.clear();
    const double sy = y;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point a = poly[i], b = poly[(i + 1) % poly.size()];
      if ((a.y <= sy && b.y > sy) || (b.y <= sy && a.y > sy))
        xs.push_back(a.x + (sy - a.y) / (b.y - a.y) * (b.x - a.x));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k])));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(xs[k + 1])));
      for (int x = x0; x <= x1; ++x)
        inside[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = 1;
    }
  }
  return inside;
}

inline std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& m, int w, int h) {
  std::vector<std::uint8_t> out(m.size(), 0);
  auto at = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0;
    return m[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          at(x, y) && at(x - 1, y) && at(x + 1, y) && at(x, y - 1) && at(x, y + 1);
  return out;
}

inline double signed_area(const std::vector<Point>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

inline std::vector<double> blur121(const std::vector<double>& v, int w, int h) {
  auto idx = [w](int x, int y) {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
  };
  std::vector<double> tmp(v.size()), out(v.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      tmp[idx(x, y)] = 0.25 * v[idx(std::max(x - 1, 0), y)] + 0.5 * v[idx(x, y)] +
                       0.25 * v[idx(std::min(x + 1, w - 1), y)];
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[idx(x, y)] = 0.25 * tmp[idx(x, std::max(y - 1, 0))] + 0.5 * tmp[idx(x, y)] +
                       0.25 * tmp[idx(x, std::min(y + 1, h - 1))];
  return out;
}

}  // namespace detail

/// Renders one sample; consumes `rng` only for texture phases and noise.
inline Sample render_sample(const BoneParams& params, const Config& cfg, Rng& rng) {
  const int w = cfg.width, h = cfg.height;
  auto idx = [w](int x, int y) {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
  };
  Sample s;
  s.params = params;
  const auto outline = bone_outline(params);
  std::vector<std::size_t> segments;
  s.landmarks = LandmarkShape(resample_closed(outline, cfg.landmarks, &segments));

  // Shadow band: region between two outward offsets of the boundary over the
  // shadowed landmark range.
  const bool shadowed = cfg.stripe_first <= cfg.stripe_last && cfg.stripe_last < cfg.landmarks;
  auto band = [&](double from, double to) {
    const double orient = detail::signed_area(outline) > 0.0 ? 1.0 : -1.0;
    const std::size_t n = outline.size();
    const std::size_t k0 = segments[cfg.stripe_first];
    const std::size_t k1 = segments[cfg.stripe_last];
    std::vector<Point> outer, inner;
    for (std::size_t k = k0; k != (k1 + 1) % n; k = (k + 1) % n) {
      const Point t = outline[(k + 1) % n] - outline[(k + n - 1) % n];
      const Point normal = (orient / norm(t)) * Point{t.y, -t.x};
      outer.push_back(outline[k] + to * normal);
      inner.push_back(outline[k] + from * normal);
    }
    outer.insert(outer.end(), inner.rbegin(), inner.rend());
    return detail::fill_polygon(outer, w, h);
  };

  const auto inside = detail::fill_polygon(outline, w, h);
  auto core = inside;
  for (int i = 0; i < cfg.rim_width; ++i) core = detail::erode(core, w, h);
  const std::vector<std::uint8_t> none(inside.size(), 0);
  const auto stripe = shadowed ? band(-(cfg.rim_width + 1.0), params.shadow_offset) : none;
  const auto stripe_rim = shadowed ? band(params.shadow_offset - cfg.stripe_rim, params.shadow_offset) : none;

  const double ph1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ph2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> canvas(inside.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = idx(x, y);
      double v = cfg.background_intensity +
                 10.0 * std::sin(2.0 * std::numbers::pi * (x / 97.0 + y / 53.0) + ph1) +
                 8.0 * std::sin(2.0 * std::numbers::pi * (-x / 41.0 + y / 71.0) + ph2);
      if (inside[i]) v = core[i] ? cfg.bone_intensity : cfg.rim_intensity;
      if (stripe[i] && !core[i]) v = stripe_rim[i] ? cfg.rim_intensity : cfg.stripe_intensity;
      canvas[i] = v;
    }
  }
  canvas = detail::blur121(canvas, w, h);

  s.image = GrayImage(w, h);
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    const double v = std::round(canvas[i] + cfg.noise_sigma * rng.normal());
    s.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }

  s.mask = GrayImage(w, h);
  auto mark = [&](Point p) {
    const int x = static_cast<int>(std::lround(p.x)), y = static_cast<int>(std::lround(p.y));
    if (s.mask.contains(x, y)) s.mask.at(x, y) = 255;
  };
  for (const Point& p : outline) mark(p);
  for (const Point& p : s.landmarks) mark(p);
  return s;
}

/// Largest distance from a landmark to the center of its nearest mask pixel.
inline double max_landmark_mask_distance(const Sample& s) {
  double worst = 0.0;
  for (const Point& p : s.landmarks) {
    double best = std::numeric_limits<double>::infinity();
    const int px = static_cast<int>(std::lround(p.x)), py = static_cast<int>(std::lround(p.y));
    for (int y = py - 2; y <= py + 2; ++y)
      for (int x = px - 2; x <= px + 2; ++x)
        if (s.mask.contains(x, y) && s.mask.at(x, y)) best = std::min(best, norm(p - Point{double(x), double(y)}));
    worst = std::max(worst, best);
  }
  return worst;
}

struct DatasetOptions {
  std::size_t count = 50;
  std::size_t train_count = 0;  ///< 0 = 60% of count (30 of 50)
  Config image;
  std::uint64_t seed = 0;
};

/// Writes images/, masks/, landmarks/ and manifest.txt under `out_dir` and
/// returns the manifest path. Image i uses stream i of the seed.
inline std::filesystem::path generate_synthetic_dataset(const DatasetOptions& opt,
                                                        const std::filesystem::path& out_dir) {
  if (opt.count < 2) throw ConfigError("synthetic dataset needs at least 2 images");
  if (opt.image.width < 32 || opt.image.height < 32) throw ConfigError("synthetic images must be at least 32x32");
  const std::size_t n_train = opt.train_count > 0 ? opt.train_count : (opt.count * 3 + 2) / 5;
  if (n_train >= opt.count) throw ConfigError("train count must leave at least one test image");

  std::vector<Sample> samples;
  samples.reserve(opt.count);
  for (std::size_t i = 0; i < opt.count; ++i) {
    Rng rng(derive_stream(opt.seed, i));
    const BoneParams p = random_bone_params(rng, opt.image);
    samples.push_back(render_sample(p, opt.image, rng));
    if (max_landmark_mask_distance(samples.back()) > 0.75)
      throw DataError("synthetic image " + std::to_string(i) + " failed the landmark/mask check");
  }

  std::error_code ec;
  for (const char* sub : {"images", "masks", "landmarks"}) {
    std::filesystem::create_directories(out_dir / sub, ec);
    if (ec) throw DataError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  Dataset ds;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "img_%03zu", i);
    DatasetEntry e;
    e.split = i < n_train ? Split::train : Split::test;
    e.image = out_dir / "images" / (std::string(stem) + ".pgm");
    e.mask = out_dir / "masks" / (std::string(stem) + ".pgm");
    e.landmarks = out_dir / "landmarks" / (std::string(stem) + ".csv");
    write_pgm(e.image, samples[i].image);
    write_pgm(*e.mask, samples[i].mask);
    write_landmarks(*e.landmarks, samples[i].landmarks);
    ds.entries.push_back(std::move(e));
  }
  const auto manifest = out_dir / "manifest.txt";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw DataError("cannot write " + manifest.string());
  out << format_manifest(ds, out_dir);
  return manifest;
}

}  // namespace shapefit::synth

#endif  // SHAPEFIT_SYNTHETIC_HPP
