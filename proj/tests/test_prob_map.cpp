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

#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "shapefit/prob_map.hpp"
#include "support.hpp"

namespace shapefit {
namespace {

/// Small 14-feature forest fit to brightness-gradient labels of random images.
const Forest& test_forest() {
  static const Forest forest = [] {
    Rng rng(1);
    std::vector<GrayImage> images, masks;
    for (int i = 0; i < 2; ++i) {
      GrayImage img(40, 30), mask(40, 30, 0);
      for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) {
          img.at(x, y) = static_cast<std::uint8_t>((x < 20 ? 50 : 200) + rng.index(30));
          if (x == 19 || x == 20) mask.at(x, y) = 255;
        }
      images.push_back(img);
      masks.push_back(mask);
    }
    const auto samples = sample_training_set(images, masks, 4, 2);
    SampleMatrix m;
    m.n_features = kFeatureCount;
    for (const auto& s : samples) m.push_back(s.features, s.label == Label::border);
    ForestParams p;
    p.n_trees = 8;
    return train_forest(m, p, 3, 2);
  }();
  return forest;
}

ProbabilityMap random_map(Rng& rng, int w, int h) {
  ProbabilityMap m(w, h);
  for (auto& v : m.values) v = static_cast<float>(rng.uniform());
  return m;
}

TEST(ComputeProbMap, ConstantImageGivesConstantMap) {
  const auto map = compute_prob_map(test_forest(), GrayImage(25, 17, 90), 2);
  const FeatureVector zero{};
  const auto expected = static_cast<float>(predict_proba(test_forest(), zero));
  for (float v : map.values) EXPECT_EQ(v, expected);
}

TEST(ComputeProbMap, FullSizeMapInUnitRangeAndSpotChecks) {
  Rng rng(4);
  const GrayImage img = testing::random_image(rng, 300, 150);
  const auto map = compute_prob_map(test_forest(), img);
  ASSERT_EQ(map.values.size(), 45000u);
  for (float v : map.values) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
  const PaddedIntegralImage p(img);
  for (int t = 0; t < 10; ++t) {
    const int x = static_cast<int>(rng.index(300)), y = static_cast<int>(rng.index(150));
    EXPECT_EQ(map.at(x, y), static_cast<float>(predict_proba(test_forest(), feature_vector(p, x, y))));
  }
}

TEST(ComputeProbMap, SerialEqualsParallel) {
  Rng rng(5);
  const GrayImage img = testing::random_image(rng, 64, 48);
  const auto serial = compute_prob_map(test_forest(), img, 1);
  EXPECT_EQ(serial, compute_prob_map(test_forest(), img, 3));
  EXPECT_EQ(serial, compute_prob_map(test_forest(), img, 16));
}

TEST(ComputeProbMap, RejectsWrongFeatureCount) {
  Forest f = test_forest();
  f.n_features = 3;
  EXPECT_THROW(compute_prob_map(f, GrayImage(5, 5)), ParameterError);
}

TEST(ComputeProbMap, ChecksRecordedCatalog) {
  Forest f = test_forest();
  f.feature_names = haar_feature_names();
  EXPECT_NO_THROW(compute_prob_map(f, GrayImage(5, 5)));
  std::swap(f.feature_names[0], f.feature_names[13]);
  EXPECT_THROW(compute_prob_map(f, GrayImage(5, 5)), ParameterError);
  f.feature_names = haar_feature_names();
  const Forest back = parse_forest(serialize(f));
  EXPECT_EQ(back.feature_names, f.feature_names);
  EXPECT_EQ(back.feature_names.front(), "edge_horizontal/3");
}

TEST(SampleBilinear, PixelsOutsideAndMidpoint) {
  Rng rng(6);
  const auto map = random_map(rng, 7, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) EXPECT_EQ(sample_bilinear(map, x, y), static_cast<double>(map.at(x, y)));
  EXPECT_EQ(sample_bilinear(map, -5, 10), 0.0);
  EXPECT_EQ(sample_bilinear(map, 6.01, 2), 0.0);
  ProbabilityMap block(2, 2);
  block.values = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(sample_bilinear(block, 0.5, 0.5), 0.5);
}

TEST(SampleBilinear, ContinuousInside) {
  Rng rng(7);
  const auto map = random_map(rng, 20, 20);
  const double h = 1e-6;
  for (int t = 0; t < 2000; ++t) {
    const double x = rng.uniform(0, 19 - h), y = rng.uniform(0, 19 - h);
    const double v = sample_bilinear(map, x, y);
    // gradient of a bilinear patch of unit-range values is at most 2 per px per axis
    EXPECT_LE(std::abs(sample_bilinear(map, x + h, y) - v), 2 * h + 1e-12);
    EXPECT_LE(std::abs(sample_bilinear(map, x, y + h) - v), 2 * h + 1e-12);
  }
}

TEST(ShapeLikelihood, OnesOutsideAndOracle) {
  ProbabilityMap ones(30, 30, 1.0f);
  Rng rng(8);
  EXPECT_DOUBLE_EQ(shape_likelihood(ones, testing::random_shape(rng, 10, 0, 29)), 1.0);
  EXPECT_DOUBLE_EQ(shape_likelihood(ones, testing::random_shape(rng, 10, 40, 90)), 0.0);
  const auto map = random_map(rng, 30, 30);
  const auto s = testing::random_shape(rng, 17, -2, 31);
  double acc = 0;
  for (const Point& p : s) acc += sample_bilinear(map, p.x, p.y);
  EXPECT_NEAR(shape_likelihood(map, s), acc / 17, 1e-15);
}

TEST(ShapeLikelihood, MonotoneUnderDomination) {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const auto b = random_map(rng, 25, 25);
    ProbabilityMap a = b;
    for (auto& v : a.values) v = std::min(1.0f, v + static_cast<float>(rng.uniform(0, 0.3)));
    const auto s = testing::random_shape(rng, 12, -3, 27);
    EXPECT_GE(shape_likelihood(a, s), shape_likelihood(b, s));
  }
}

ShapeModel small_model() {
  PcaOptions p;
  p.fixed_components = 4;
  return train_shape_model(testing::bone_shapes(20, 10), p).model;
}

TEST(ShapeCost, CostIsOneMinusLikelihood) {
  const ShapeModel m = small_model();
  ShapeParams params;
  params.b.assign(4, 0.0);
  params.pose = {150, 75, m.reference_scale, m.reference_scale, 0};
  EXPECT_NEAR(shape_cost(ProbabilityMap(300, 150, 0.95f), m, params), 0.05, 1e-7);
  EXPECT_DOUBLE_EQ(shape_cost(ProbabilityMap(300, 150, 0.0f), m, params), 1.0);
  EXPECT_DOUBLE_EQ(shape_cost(ProbabilityMap(300, 150, 1.0f), m, params), 0.0);
}

TEST(ShapeCost, WithinUnitInterval) {
  const ShapeModel m = small_model();
  Rng rng(11);
  const auto map = random_map(rng, 300, 150);
  const auto bounds = parameter_bounds(m, 300, 150);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v;
    for (const auto& b : bounds) v.push_back(rng.uniform(b.lo, b.hi));
    const double c = shape_cost(map, m, ShapeParams::from_vector(v));
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(ProbMapStorage, PfmRoundTripAndCache) {
  testing::TempDir dir("pm");
  Rng rng(12);
  const auto map = random_map(rng, 33, 21);
  const auto path = dir / "m.pfm";
  save_prob_map(path, map, "fnv1a64:abc");
  EXPECT_EQ(load_prob_map(path), map);
  EXPECT_EQ(testing::slurp(sidecar_path(path)), "forest fnv1a64:abc\n");
  const auto cached = load_cached_prob_map(path, "fnv1a64:abc");
  ASSERT_TRUE(cached.has_value());
  EXPECT_EQ(*cached, map);
  EXPECT_FALSE(load_cached_prob_map(path, "fnv1a64:def").has_value());
  EXPECT_FALSE(load_cached_prob_map(dir / "missing.pfm", "fnv1a64:abc").has_value());
}

TEST(ProbMapStorage, PfmHeaderAndByteOrder) {
  testing::TempDir dir("pfm");
  ProbabilityMap map(2, 2);
  map.values = {0.0f, 0.25f, 0.5f, 1.0f};  // top row first in memory
  save_prob_map(dir / "m.pfm", map, "h");
  const std::string bytes = testing::slurp(dir / "m.pfm");
  const std::string header = "Pf\n2 2\n-1.0\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 16);
  float first;
  std::memcpy(&first, bytes.data() + header.size(), 4);
  EXPECT_EQ(first, 0.5f);  // rows stored bottom to top
}

TEST(ProbMapStorage, OutOfRangeValuesRejected) {
  FloatImage img{2, 1, {0.5f, 1.5f}};
  EXPECT_THROW(to_probability_map(img), DataError);
}

TEST(ContentHash, StableFormat) {
  EXPECT_EQ(content_hash(""), "fnv1a64:cbf29ce484222325");
}

}  // namespace
}  // namespace shapefit
