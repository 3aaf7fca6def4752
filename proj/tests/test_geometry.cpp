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

#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "shapefit/geometry.hpp"
#include "support.hpp"

namespace shapefit {
namespace {

using testing::random_shape;

LandmarkShape square() { return LandmarkShape({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}); }

void expect_near(const LandmarkShape& a, const LandmarkShape& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].x, b[i].x, tol) << "point " << i;
    EXPECT_NEAR(a[i].y, b[i].y, tol) << "point " << i;
  }
}

TEST(Centroid, SymmetricSquare) {
  const Point c = centroid(LandmarkShape({{0, 0}, {2, 0}, {0, 2}, {2, 2}}));
  EXPECT_DOUBLE_EQ(c.x, 1.0);
  EXPECT_DOUBLE_EQ(c.y, 1.0);
}

TEST(Centroid, IdenticalPoints) {
  const Point c = centroid(LandmarkShape({{5, 5}, {5, 5}, {5, 5}}));
  EXPECT_DOUBLE_EQ(c.x, 5.0);
  EXPECT_DOUBLE_EQ(c.y, 5.0);
}

TEST(Centroid, MatchesNaiveMean) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_shape(rng, 4);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      sx += s[i].x;
      sy += s[i].y;
    }
    EXPECT_NEAR(centroid(s).x, sx / 4, 1e-12);
    EXPECT_NEAR(centroid(s).y, sy / 4, 1e-12);
  }
}

TEST(ApplyPose, IdentityLeavesShape) {
  Rng rng(2);
  const auto s = random_shape(rng, 7);
  expect_near(apply_pose(s, {}), s, 1e-14);
}

TEST(ApplyPose, UniformScaleAboutCentroid) {
  expect_near(apply_pose(square(), {0, 0, 2, 2, 0}),
              LandmarkShape({{-2, -2}, {2, -2}, {2, 2}, {-2, 2}}), 1e-15);
}

TEST(ApplyPose, MatchesHandMatrix) {
  const LandmarkShape s({{1, 2}, {4, 0}, {3, 5}, {-1, 3}, {0, 0}});
  const Pose pose{3, -2, 1.5, 0.9, std::numbers::pi / 6};
  double cx = 0, cy = 0;
  for (const Point& p : s) {
    cx += p.x / 5;
    cy += p.y / 5;
  }
  // R * diag(sx, sy) as an explicit 2x2 matrix
  const double c = std::cos(pose.theta), sn = std::sin(pose.theta);
  const double m00 = c * pose.sx, m01 = -sn * pose.sy, m10 = sn * pose.sx, m11 = c * pose.sy;
  const auto out = apply_pose(s, pose);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double dx = s[i].x - cx, dy = s[i].y - cy;
    EXPECT_NEAR(out[i].x, m00 * dx + m01 * dy + cx + pose.tx, 1e-12);
    EXPECT_NEAR(out[i].y, m10 * dx + m11 * dy + cy + pose.ty, 1e-12);
  }
}

TEST(ApplyPose, RejectsNonPositiveScale) {
  EXPECT_THROW(apply_pose(square(), {0, 0, 0, 1, 0}), InvalidPoseError);
  EXPECT_THROW(apply_pose(square(), {0, 0, 1, -2, 0}), InvalidPoseError);
  EXPECT_THROW(apply_pose(square(), {0, 0, 1, std::nan(""), 0}), InvalidPoseError);
}

TEST(ApplyPose, InverseRoundTrip) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto s = random_shape(rng, 6, -20, 20);
    const double k = rng.uniform(0.2, 3.0);
    const Pose p{rng.uniform(-50, 50), rng.uniform(-50, 50), k, k, rng.uniform(-3, 3)};
    expect_near(apply_pose(apply_pose(s, p), inverse(p)), s, 1e-9);
  }
}

TEST(ApplyPose, CentroidMovesByTranslation) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto s = random_shape(rng, 5, -10, 10);
    const Pose p{rng.uniform(-30, 30), rng.uniform(-30, 30), 1, 1, rng.uniform(-3, 3)};
    const Point c0 = centroid(s), c1 = centroid(apply_pose(s, p));
    EXPECT_NEAR(c1.x, c0.x + p.tx, 1e-9);
    EXPECT_NEAR(c1.y, c0.y + p.ty, 1e-9);
  }
}

TEST(AlignSimilarity, IdentityForEqualShapes) {
  Rng rng(5);
  const auto s = random_shape(rng, 8);
  const Pose p = align_similarity(s, s);
  EXPECT_NEAR(p.tx, 0, 1e-12);
  EXPECT_NEAR(p.ty, 0, 1e-12);
  EXPECT_NEAR(p.sx, 1, 1e-12);
  EXPECT_NEAR(p.sy, 1, 1e-12);
  EXPECT_NEAR(p.theta, 0, 1e-12);
}

TEST(AlignSimilarity, RecoversKnownPose) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const auto s = random_shape(rng, 6, -10, 10);
    const double k = rng.uniform(0.5, 2.0);
    const Pose q{rng.uniform(-20, 20), rng.uniform(-20, 20), k, k, rng.uniform(-3, 3)};
    const auto target = apply_pose(s, q);
    EXPECT_LT(squared_distance(apply_pose(s, align_similarity(s, target)), target), 1e-18);
  }
}

TEST(AlignSimilarity, BeatsRandomSearch) {
  Rng rng(7);
  const auto src = random_shape(rng, 6);
  const auto dst = random_shape(rng, 6);
  const Pose best = align_similarity(src, dst);
  const double r0 = squared_distance(apply_pose(src, best), dst);
  for (int t = 0; t < 10000; ++t) {
    const double k = best.sx * rng.uniform(0.7, 1.3);
    const Pose p{best.tx + rng.uniform(-2, 2), best.ty + rng.uniform(-2, 2), k, k,
                 best.theta + rng.uniform(-0.5, 0.5)};
    ASSERT_LE(r0, squared_distance(apply_pose(src, p), dst) + 1e-12);
  }
}

TEST(AlignSimilarity, ResidualInvariantToCommonRotation) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto src = random_shape(rng, 6);
    const auto dst = random_shape(rng, 6);
    const double r0 = squared_distance(apply_pose(src, align_similarity(src, dst)), dst);
    const Pose rot{0, 0, 1, 1, rng.uniform(-3, 3)};
    // rotate both about the origin: centroid-relative rotation plus the moved centroid
    auto about_origin = [&](const LandmarkShape& s) {
      const Point c = centroid(s);
      const double cs = std::cos(rot.theta), sn = std::sin(rot.theta);
      const Point moved{cs * c.x - sn * c.y, sn * c.x + cs * c.y};
      return apply_pose(s, {moved.x - c.x, moved.y - c.y, 1, 1, rot.theta});
    };
    const auto src2 = about_origin(src), dst2 = about_origin(dst);
    const double r1 = squared_distance(apply_pose(src2, align_similarity(src2, dst2)), dst2);
    EXPECT_NEAR(r0, r1, 1e-9);
  }
}

TEST(AlignSimilarity, DegenerateSourceThrows) {
  const LandmarkShape flat({{2, 2}, {2, 2}, {2, 2}});
  EXPECT_THROW(align_similarity(flat, LandmarkShape({{0, 0}, {1, 0}, {0, 1}})), AlignmentError);
}

std::vector<LandmarkShape> transformed_copies(const LandmarkShape& base, std::size_t n, Rng& rng) {
  std::vector<LandmarkShape> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = rng.uniform(0.3, 4.0);
    out.push_back(apply_pose(base, {rng.uniform(-100, 100), rng.uniform(-100, 100), k, k,
                                    rng.uniform(-3.1, 3.1)}));
  }
  return out;
}

TEST(Procrustes, SimilarityCopiesCollapseOntoMean) {
  Rng rng(9);
  const auto base = random_shape(rng, 12, -5, 5);
  const auto shapes = transformed_copies(base, 20, rng);
  const auto r = generalized_procrustes(shapes);
  EXPECT_TRUE(r.converged);
  for (const auto& a : r.aligned)
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(norm(a[i] - r.mean[i]), 1e-6);
}

TEST(Procrustes, IdenticalPairConvergesInOneIteration) {
  Rng rng(10);
  const auto s = random_shape(rng, 5);
  const std::vector<LandmarkShape> shapes{s, s};
  const auto r = generalized_procrustes(shapes);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Procrustes, DistanceNonIncreasing) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto base = random_shape(rng, 10);
    auto shapes = transformed_copies(base, 5, rng);
    for (auto& s : shapes)
      for (Point& p : s.points()) p = p + Point{rng.normal() * 0.5, rng.normal() * 0.5};
    const auto r = generalized_procrustes(shapes);
    ASSERT_FALSE(r.distance_history.empty());
    for (std::size_t i = 1; i < r.distance_history.size(); ++i)
      EXPECT_LE(r.distance_history[i], r.distance_history[i - 1] + 1e-12);
  }
}

TEST(Procrustes, MeanCenteredAndUnitSize) {
  Rng rng(12);
  std::vector<LandmarkShape> shapes;
  for (int i = 0; i < 8; ++i) shapes.push_back(random_shape(rng, 9, -10, 30));
  const auto r = generalized_procrustes(shapes);
  const Point c = centroid(r.mean);
  EXPECT_NEAR(c.x, 0, 1e-9);
  EXPECT_NEAR(c.y, 0, 1e-9);
  EXPECT_NEAR(centroid_size(r.mean), 1.0, 1e-9);
  for (const auto& a : r.aligned) EXPECT_NEAR(centroid_size(a), 1.0, 1e-9);
}

TEST(Procrustes, DegenerateShapeThrows) {
  const std::vector<LandmarkShape> shapes{square(), LandmarkShape({{1, 1}, {1, 1}, {1, 1}, {1, 1}})};
  EXPECT_THROW(generalized_procrustes(shapes), AlignmentError);
}

TEST(LandmarkFile, RoundTripIsExact) {
  Rng rng(13);
  const auto s = random_shape(rng, 64, -1000, 1000);
  std::istringstream in(format_landmarks(s));
  EXPECT_EQ(parse_landmarks(in, "mem"), s);
}

TEST(LandmarkFile, MalformedRowIsDataError) {
  std::istringstream in("1,2\n3;4\n5,6\n");
  EXPECT_THROW(parse_landmarks(in, "mem"), DataError);
}

}  // namespace
}  // namespace shapefit
