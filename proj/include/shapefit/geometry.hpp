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

#ifndef SHAPEFIT_GEOMETRY_HPP
#define SHAPEFIT_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "shapefit/error.hpp"
#include "shapefit/format.hpp"

namespace shapefit {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }

/// Ordered landmark list in pixel coordinates (origin top-left, y down).
class LandmarkShape {
 public:
  LandmarkShape() = default;
  explicit LandmarkShape(std::vector<Point> points) : points_(std::move(points)) {}

  std::size_t size() const noexcept { return points_.size(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  Point& operator[](std::size_t i) { return points_[i]; }
  std::span<const Point> points() const noexcept { return points_; }
  std::span<Point> points() noexcept { return points_; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  friend bool operator==(const LandmarkShape&, const LandmarkShape&) = default;

 private:
  std::vector<Point> points_;
};

/// Throws DataError unless the shape has >= 3 finite points.
inline void validate(const LandmarkShape& shape) {
  if (shape.size() < 3) throw DataError("shape needs at least 3 landmarks");
  for (const Point& p : shape)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw DataError("shape has a non-finite coordinate");
}

/// Placement of a model-frame shape: anisotropic scale along the shape's own
/// axes, then rotation, then translation, all about the shape centroid.
struct Pose {
  double tx = 0.0;
  double ty = 0.0;
  double sx = 1.0;
  double sy = 1.0;
  double theta = 0.0;

  static Pose identity() { return {}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

inline void validate(const Pose& pose) {
  if (!(std::isfinite(pose.tx) && std::isfinite(pose.ty) && std::isfinite(pose.sx) &&
        std::isfinite(pose.sy) && std::isfinite(pose.theta)))
    throw InvalidPoseError("pose has a non-finite field");
  if (!(pose.sx > 0.0) || !(pose.sy > 0.0))
    throw InvalidPoseError("pose scale must be positive");
}

inline Point centroid(const LandmarkShape& shape) {
  Point c;
  for (const Point& p : shape) c = c + p;
  const double n = static_cast<double>(shape.size());
  return {c.x / n, c.y / n};
}

/// sqrt of the summed squared distances to the centroid.
inline double centroid_size(const LandmarkShape& shape) {
  const Point c = centroid(shape);
  double acc = 0.0;
  for (const Point& p : shape) acc += dot(p - c, p - c);
  return std::sqrt(acc);
}

inline double squared_distance(const LandmarkShape& a, const LandmarkShape& b) {
  if (a.size() != b.size()) throw DataError("landmark count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += dot(a[i] - b[i], a[i] - b[i]);
  return acc;
}

/// p -> T + R(theta) diag(sx, sy) (p - c) + c, with c the input centroid.
inline LandmarkShape apply_pose(const LandmarkShape& shape, const Pose& pose) {
  validate(pose);
  const Point c = centroid(shape);
  const double cs = std::cos(pose.theta);
  const double sn = std::sin(pose.theta);
  std::vector<Point> out;
  out.reserve(shape.size());
  for (const Point& p : shape) {
    const double dx = pose.sx * (p.x - c.x);
    const double dy = pose.sy * (p.y - c.y);
    out.push_back({pose.tx + cs * dx - sn * dy + c.x, pose.ty + sn * dx + cs * dy + c.y});
  }
  return LandmarkShape(std::move(out));
}

/// Pose undoing a uniform-scale pose: apply_pose(apply_pose(s, p), inverse(p)) == s.
inline Pose inverse(const Pose& pose) {
  validate(pose);
  if (pose.sx != pose.sy) throw InvalidPoseError("only uniform-scale poses are invertible");
  return {-pose.tx, -pose.ty, 1.0 / pose.sx, 1.0 / pose.sy, -pose.theta};
}

/// Least-squares uniform-scale similarity taking `source` onto `target`.
inline Pose align_similarity(const LandmarkShape& source, const LandmarkShape& target) {
  if (source.size() != target.size()) throw DataError("landmark count mismatch");
  const Point cs = centroid(source);
  const Point ct = centroid(target);
  double sdot = 0.0, scross = 0.0, snorm = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Point a = source[i] - cs;
    const Point b = target[i] - ct;
    sdot += dot(a, b);
    scross += cross(a, b);
    snorm += dot(a, a);
  }
  if (!(snorm > 1e-24)) throw AlignmentError("degenerate source shape (coincident points)");
  const double scale = std::hypot(sdot, scross) / snorm;
  if (!(scale > 0.0)) throw AlignmentError("target shape is degenerate");
  return {ct.x - cs.x, ct.y - cs.y, scale, scale, std::atan2(scross, sdot)};
}

struct ProcrustesOptions {
  double tol = 1e-7;
  int max_iter = 100;
};

struct ProcrustesResult {
  std::vector<LandmarkShape> aligned;  ///< centered, unit centroid size
  LandmarkShape mean;                  ///< centered, unit centroid size
  int iterations = 0;
  bool converged = false;
  /// Sum of squared distances of aligned shapes to the mean, per iteration.
  std::vector<double> distance_history;
  /// Centroid size of each input shape in its original frame.
  std::vector<double> centroid_sizes;
};

namespace detail {

inline LandmarkShape normalize_shape(const LandmarkShape& s, double size) {
  const Point c = centroid(s);
  std::vector<Point> pts;
  pts.reserve(s.size());
  for (const Point& p : s) pts.push_back((1.0 / size) * (p - c));
  return LandmarkShape(std::move(pts));
}

/// Rotates centered `shape` about the origin to best match centered `ref`.
inline LandmarkShape rotate_onto(const LandmarkShape& shape, const LandmarkShape& ref) {
  double sdot = 0.0, scross = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    sdot += dot(shape[i], ref[i]);
    scross += cross(shape[i], ref[i]);
  }
  const double theta = std::atan2(scross, sdot);
  const double c = std::cos(theta), s = std::sin(theta);
  LandmarkShape out = shape;
  for (Point& p : out.points()) p = {c * p.x - s * p.y, s * p.x + c * p.y};
  return out;
}

}  // namespace detail

/// Iteratively aligns every shape (translation, scale, rotation) to a common
/// unit-size mean. The mean starts as the first normalized shape.
inline ProcrustesResult generalized_procrustes(std::span<const LandmarkShape> shapes,
                                               const ProcrustesOptions& options = {}) {
  if (shapes.size() < 2) throw DataError("Procrustes alignment needs at least 2 shapes");
  const std::size_t L = shapes.front().size();
  ProcrustesResult result;
  std::vector<LandmarkShape> normalized;
  normalized.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i].size() != L) throw DataError("shapes differ in landmark count");
    validate(shapes[i]);
    const double size = centroid_size(shapes[i]);
    if (!(size > 1e-12)) throw AlignmentError("shape " + std::to_string(i) + " is degenerate");
    result.centroid_sizes.push_back(size);
    normalized.push_back(detail::normalize_shape(shapes[i], size));
  }

  LandmarkShape mean = normalized.front();
  result.aligned = normalized;
  for (int it = 1; it <= options.max_iter; ++it) {
    for (std::size_t i = 0; i < normalized.size(); ++i)
      result.aligned[i] = detail::rotate_onto(normalized[i], mean);

    std::vector<Point> acc(L);
    for (const auto& s : result.aligned)
      for (std::size_t j = 0; j < L; ++j) acc[j] = acc[j] + s[j];
    LandmarkShape next(std::move(acc));
    const double size = centroid_size(next);
    if (!(size > 1e-12)) throw AlignmentError("mean shape collapsed during alignment");
    next = detail::normalize_shape(next, size);

    double total = 0.0;
    for (const auto& s : result.aligned) total += squared_distance(s, next);
    result.distance_history.push_back(total);

    const double change = std::sqrt(squared_distance(next, mean));
    mean = std::move(next);
    result.iterations = it;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.mean = std::move(mean);
  return result;
}

// Landmark files: one "x,y" per line, '#' comments and blank lines ignored.

inline LandmarkShape parse_landmarks(std::istream& in, const std::string& name) {
  std::vector<Point> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError(name + ":" + std::to_string(lineno) + ": expected 'x,y'");
    const std::string ctx = name + ":" + std::to_string(lineno);
    std::string_view view(line);
    pts.push_back({parse_double(view.substr(0, comma), ctx),
                   parse_double(view.substr(comma + 1), ctx)});
  }
  LandmarkShape shape(std::move(pts));
  try {
    validate(shape);
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
  return shape;
}

inline LandmarkShape read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open landmark file " + path.string());
  return parse_landmarks(in, path.string());
}

inline std::string format_landmarks(const LandmarkShape& shape) {
  std::string out;
  for (const Point& p : shape) {
    out += format_double(p.x);
    out += ',';
    out += format_double(p.y);
    out += '\n';
  }
  return out;
}

inline void write_landmarks(const std::filesystem::path& path, const LandmarkShape& shape) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write landmark file " + path.string());
  out << format_landmarks(shape);
}

}  // namespace shapefit

#endif  // SHAPEFIT_GEOMETRY_HPP
