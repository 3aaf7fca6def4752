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

#ifndef SHAPEFIT_SHAPE_MODEL_HPP
#define SHAPEFIT_SHAPE_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shapefit/error.hpp"
#include "shapefit/geometry.hpp"

namespace shapefit {

/// Interleaved (x0, y0, x1, y1, ...) vector of a shape.
inline Eigen::VectorXd stack(const LandmarkShape& shape) {
  Eigen::VectorXd v(2 * shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    v[2 * i] = shape[i].x;
    v[2 * i + 1] = shape[i].y;
  }
  return v;
}

inline LandmarkShape unstack(const Eigen::VectorXd& v) {
  std::vector<Point> pts(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {v[2 * i], v[2 * i + 1]};
  return LandmarkShape(std::move(pts));
}

/// Linear point-distribution model: mean + basis * b, followed by a Pose.
struct ShapeModel {
  static constexpr int kFormatVersion = 1;

  std::size_t landmarks = 0;
  Eigen::VectorXd mean;         ///< 2L, normalized frame
  Eigen::MatrixXd basis;        ///< 2L x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  ///< k, non-increasing
  double variance_retained = 0.0;
  /// Mean original-image centroid size of the training shapes (px).
  double reference_scale = 1.0;

  std::size_t components() const { return static_cast<std::size_t>(basis.cols()); }
  /// Optimizer dimension: k deformation coefficients plus 5 pose fields.
  std::size_t dimension() const { return components() + 5; }
  bool trained() const { return landmarks > 0 && mean.size() > 0; }
};

/// Deformation coefficients plus pose. As a flat vector the layout is
/// (b_1 .. b_k, tx, ty, sx, sy, theta).
struct ShapeParams {
  std::vector<double> b;
  Pose pose;

  std::vector<double> to_vector() const {
    std::vector<double> v;
    v.reserve(b.size() + 5);
    v.assign(b.begin(), b.end());
    for (double x : {pose.tx, pose.ty, pose.sx, pose.sy, pose.theta}) v.push_back(x);
    return v;
  }

  static ShapeParams from_vector(std::span<const double> v) {
    if (v.size() < 5) throw ParameterError("parameter vector shorter than the pose");
    const std::size_t k = v.size() - 5;
    ShapeParams p;
    p.b.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
    p.pose = {v[k], v[k + 1], v[k + 2], v[k + 3], v[k + 4]};
    return p;
  }
};

/// Either a variance fraction to retain or a fixed component count.
struct PcaOptions {
  double variance_cutoff = 0.95;
  std::optional<std::size_t> fixed_components;
};

/// PCA on already aligned shapes. Eigenvectors are sign-normalized so the
/// largest-magnitude entry is positive; covariance uses 1/(N-1).
inline ShapeModel fit_pca(std::span<const LandmarkShape> aligned, const PcaOptions& options = {}) {
  if (aligned.size() < 2) throw TrainingError("PCA needs at least 2 shapes");
  const std::size_t L = aligned.front().size();
  const auto dim = static_cast<Eigen::Index>(2 * L);
  if (options.fixed_components) {
    if (*options.fixed_components < 1 || *options.fixed_components > 2 * L)
      throw ConfigError("component count must be in [1, 2L]");
  } else if (!(options.variance_cutoff > 0.0 && options.variance_cutoff <= 1.0)) {
    throw ConfigError("variance cutoff must be in (0, 1]");
  }

  Eigen::MatrixXd data(dim, static_cast<Eigen::Index>(aligned.size()));
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (aligned[i].size() != L) throw DataError("shapes differ in landmark count");
    data.col(static_cast<Eigen::Index>(i)) = stack(aligned[i]);
  }
  ShapeModel model;
  model.landmarks = L;
  model.mean = data.rowwise().mean();
  const Eigen::MatrixXd centered = data.colwise() - model.mean;
  const Eigen::MatrixXd cov =
      centered * centered.transpose() / static_cast<double>(aligned.size() - 1);

  const double total = cov.trace();
  if (!(total > 1e-18 * std::max(1.0, model.mean.squaredNorm())))
    throw TrainingError("training shapes have zero variance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw TrainingError("eigendecomposition failed");
  // Eigen sorts ascending; reverse to non-increasing.
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = std::max(values[i], 0.0);
  const double positive_total = values.sum();

  std::size_t k = 0;
  if (options.fixed_components) {
    k = *options.fixed_components;
  } else {
    double cumulative = 0.0;
    const double goal = options.variance_cutoff * positive_total * (1.0 - 1e-12);
    while (k < static_cast<std::size_t>(dim)) {
      cumulative += values[static_cast<Eigen::Index>(k)];
      ++k;
      if (cumulative >= goal) break;
    }
  }
  const auto kk = static_cast<Eigen::Index>(k);
  model.basis = vectors.leftCols(kk);
  model.eigenvalues = values.head(kk);
  for (Eigen::Index c = 0; c < kk; ++c) {
    Eigen::Index arg = 0;
    model.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (model.basis(arg, c) < 0.0) model.basis.col(c) *= -1.0;
  }
  model.variance_retained = std::min(1.0, model.eigenvalues.sum() / positive_total);
  return model;
}

struct ShapeModelTraining {
  ShapeModel model;
  ProcrustesResult alignment;
};

/// Procrustes alignment of raw image-frame shapes followed by PCA. The
/// reference scale is the mean original centroid size.
inline ShapeModelTraining train_shape_model(std::span<const LandmarkShape> shapes,
                                            const PcaOptions& pca = {},
                                            const ProcrustesOptions& gpa = {}) {
  ShapeModelTraining out;
  out.alignment = generalized_procrustes(shapes, gpa);
  out.model = fit_pca(out.alignment.aligned, pca);
  double s = 0.0;
  for (double c : out.alignment.centroid_sizes) s += c;
  out.model.reference_scale = s / static_cast<double>(out.alignment.centroid_sizes.size());
  return out;
}

inline void check_dimension(const ShapeModel& model, std::size_t k) {
  if (!model.trained()) throw ParameterError("shape model is not trained");
  if (k != model.components())
    throw ParameterError("expected " + std::to_string(model.components()) +
                         " deformation coefficients, got " + std::to_string(k));
}

/// Model-frame shape mean + basis * b, before any pose.
inline LandmarkShape deform(const ShapeModel& model, std::span<const double> b) {
  check_dimension(model, b.size());
  const Eigen::Map<const Eigen::VectorXd> coeffs(b.data(), static_cast<Eigen::Index>(b.size()));
  return unstack(model.mean + model.basis * coeffs);
}

inline LandmarkShape synthesize(const ShapeModel& model, const ShapeParams& params) {
  return apply_pose(deform(model, params.b), params.pose);
}

/// b = basis^T (stack(shape) - mean) for a normalized-frame shape.
inline std::vector<double> project(const ShapeModel& model, const LandmarkShape& aligned_shape) {
  if (!model.trained()) throw ParameterError("shape model is not trained");
  if (aligned_shape.size() != model.landmarks) throw ParameterError("landmark count mismatch");
  const Eigen::VectorXd b = model.basis.transpose() * (stack(aligned_shape) - model.mean);
  return {b.data(), b.data() + b.size()};
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Search box around the image center; scale bounds are relative to the
/// model's reference scale.
struct BoundsConfig {
  double translation = 100.0;  ///< px each direction
  double scale_lo = 0.8;
  double scale_hi = 1.5;
  double rotation = std::numbers::pi / 4.0;
  double deformation_sigmas = 3.0;
};

/// Per-dimension bounds in ShapeParams::to_vector() order.
inline std::vector<Interval> parameter_bounds(const ShapeModel& model, double image_w,
                                              double image_h, const BoundsConfig& cfg = {}) {
  if (!model.trained()) throw ParameterError("shape model is not trained");
  if (!(image_w > 0.0 && image_h > 0.0)) throw ParameterError("image dimensions must be positive");
  std::vector<Interval> bounds;
  bounds.reserve(model.dimension());
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
    const double eps = std::sqrt(model.eigenvalues[i]);
    if (!(eps > 0.0))
      throw ParameterError("component " + std::to_string(i) + " has zero variance");
    bounds.push_back({-cfg.deformation_sigmas * eps, cfg.deformation_sigmas * eps});
  }
  const double s0 = model.reference_scale;
  bounds.push_back({image_w / 2.0 - cfg.translation, image_w / 2.0 + cfg.translation});
  bounds.push_back({image_h / 2.0 - cfg.translation, image_h / 2.0 + cfg.translation});
  bounds.push_back({cfg.scale_lo * s0, cfg.scale_hi * s0});
  bounds.push_back({cfg.scale_lo * s0, cfg.scale_hi * s0});
  bounds.push_back({-cfg.rotation, cfg.rotation});
  return bounds;
}

// Serialization: {version, L, k, mean[], basis[][], eigenvalues[],
// variance_retained, reference_scale}.

inline nlohmann::ordered_json to_json(const ShapeModel& model) {
  nlohmann::ordered_json j;
  j["version"] = ShapeModel::kFormatVersion;
  j["L"] = model.landmarks;
  j["k"] = model.components();
  j["mean"] = std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size());
  auto basis = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < model.basis.cols(); ++c) {
    const Eigen::VectorXd col = model.basis.col(c);
    basis.push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  j["basis"] = std::move(basis);
  j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                         model.eigenvalues.data() + model.eigenvalues.size());
  j["variance_retained"] = model.variance_retained;
  j["reference_scale"] = model.reference_scale;
  return j;
}

inline ShapeModel shape_model_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("version").get<int>() != ShapeModel::kFormatVersion)
      throw DataError("unsupported shape model version");
    ShapeModel m;
    m.landmarks = j.at("L").get<std::size_t>();
    const auto k = j.at("k").get<std::size_t>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto basis = j.at("basis").get<std::vector<std::vector<double>>>();
    const auto eig = j.at("eigenvalues").get<std::vector<double>>();
    const auto dim = 2 * m.landmarks;
    if (m.landmarks < 3 || mean.size() != dim || basis.size() != k || eig.size() != k || k == 0)
      throw DataError("shape model dimensions are inconsistent");
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(dim));
    m.basis.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < k; ++c) {
      if (basis[c].size() != dim) throw DataError("shape model basis vector has wrong length");
      m.basis.col(static_cast<Eigen::Index>(c)) =
          Eigen::Map<const Eigen::VectorXd>(basis[c].data(), static_cast<Eigen::Index>(dim));
    }
    m.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eig.data(), static_cast<Eigen::Index>(k));
    m.variance_retained = j.at("variance_retained").get<double>();
    m.reference_scale = j.at("reference_scale").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed shape model: ") + e.what());
  }
}

inline std::string serialize(const ShapeModel& model) { return to_json(model).dump(2) + "\n"; }

inline ShapeModel parse_shape_model(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("shape model is not valid JSON: ") + e.what());
  }
  return shape_model_from_json(j);
}

inline void save_shape_model(const std::filesystem::path& path, const ShapeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize(model);
}

inline ShapeModel load_shape_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open shape model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_shape_model(ss.str());
}

}  // namespace shapefit

#endif  // SHAPEFIT_SHAPE_MODEL_HPP
