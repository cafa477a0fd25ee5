// Copyright 2026 The midbox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "midbox/error.hpp"
#include "midbox/eval.hpp"
#include "midbox/geometry.hpp"
#include "oracles.hpp"

namespace midbox {
namespace {

constexpr double kTol = 1e-9;

void expect_point(Point2 actual, Point2 expected, double tol = kTol) {
  EXPECT_NEAR(actual.x, expected.x, tol);
  EXPECT_NEAR(actual.y, expected.y, tol);
}

MidpointQuad positions(const KeypointSet& kp) { return kp.midpoints; }

ScoredMidpoints scored(const MidpointQuad& q, std::array<double, 4> s = {1, 1, 1, 1}) {
  ScoredMidpoints out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = {q[i], s[i]};
  return out;
}

ScoredMidpoints shifted(const KeypointSet& kp) {
  ScoredMidpoints out;
  for (MidLabel l : kMidLabels) {
    out[index_of(l)] = {apply_shift(kp.midpoint(l), l, kp.shift(l)), 1.0};
  }
  return out;
}

TEST(Canonicalize, SwapsExtentsInSecondQuarterTurn) {
  const OrientedBox b = canonicalize({{0, 0}, 2, 4, 3 * kPi / 4, 0});
  EXPECT_DOUBLE_EQ(b.w, 4);
  EXPECT_DOUBLE_EQ(b.h, 2);
  EXPECT_NEAR(b.theta, kPi / 4, kTol);
}

TEST(Canonicalize, ReducesByHalfTurn) {
  const OrientedBox b = canonicalize({{5, 5}, 3, 3, kPi, 0});
  EXPECT_DOUBLE_EQ(b.w, 3);
  EXPECT_DOUBLE_EQ(b.h, 3);
  EXPECT_NEAR(b.theta, 0.0, kTol);
  expect_point(b.center, {5, 5});
}

TEST(Canonicalize, RejectsBadExtents) {
  EXPECT_THROW(canonicalize({{0, 0}, 0, 1, 0, 0}), Error);
  EXPECT_THROW(canonicalize({{0, 0}, 1, -1, 0, 0}), Error);
  EXPECT_THROW(canonicalize({{0, 0}, NAN, 1, 0, 0}), Error);
  EXPECT_THROW(canonicalize({{0, 0}, 1, 1, INFINITY, 0}), Error);
}

TEST(Canonicalize, IdempotentAndSamePointSet) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  for (int n = 0; n < 500; ++n) {
    OrientedBox b = oracle::random_box(rng, 1, 100);
    b.theta = angle(rng);
    const OrientedBox c = canonicalize(b);
    EXPECT_GE(c.theta, 0.0);
    EXPECT_LT(c.theta, kHalfPi);
    const OrientedBox cc = canonicalize(c);
    EXPECT_EQ(cc.w, c.w);
    EXPECT_EQ(cc.h, c.h);
    EXPECT_EQ(cc.theta, c.theta);
    EXPECT_EQ(cc.center, c.center);
    EXPECT_NEAR(rotated_iou(b, c), 1.0, 1e-9);
  }
}

TEST(QuadrantLabel, TieBreaks) {
  EXPECT_EQ(quadrant_label({-1, 0}), MidLabel::kLeft);
  EXPECT_EQ(quadrant_label({0, -1}), MidLabel::kTop);
  EXPECT_EQ(quadrant_label({1, 0}), MidLabel::kRight);
  EXPECT_EQ(quadrant_label({0, 1}), MidLabel::kBottom);
  EXPECT_EQ(quadrant_label({-1, -1}), MidLabel::kLeft);
  EXPECT_EQ(quadrant_label({1, -1}), MidLabel::kTop);
  EXPECT_EQ(quadrant_label({1, 1}), MidLabel::kRight);
  EXPECT_EQ(quadrant_label({-1, 1}), MidLabel::kBottom);
  EXPECT_THROW(quadrant_label({0, 0}), Error);
}

TEST(BoxToKeypoints, AxisAligned) {
  const KeypointSet kp = box_to_keypoints({{100, 100}, 40, 20, 0, 0});
  expect_point(kp.midpoint(MidLabel::kLeft), {80, 100});
  expect_point(kp.midpoint(MidLabel::kTop), {100, 90});
  expect_point(kp.midpoint(MidLabel::kRight), {120, 100});
  expect_point(kp.midpoint(MidLabel::kBottom), {100, 110});
  EXPECT_DOUBLE_EQ(kp.shift(MidLabel::kLeft).x, 20);
  EXPECT_DOUBLE_EQ(kp.shift(MidLabel::kLeft).y, 0);
  EXPECT_DOUBLE_EQ(kp.radius, 10);
  for (double s : kp.midpoint_scores) EXPECT_EQ(s, 1.0);
  EXPECT_EQ(kp.center_score, 1.0);
}

TEST(BoxToKeypoints, DiagonalSquareAgainstCorners) {
  const double s = 2 * std::sqrt(2.0);
  const OrientedBox box{{0, 0}, s, s, kPi / 4, 0};
  const KeypointSet kp = box_to_keypoints(box);
  expect_point(kp.midpoint(MidLabel::kLeft), {-1, -1});
  EXPECT_NEAR(kp.shift(MidLabel::kLeft).x, 1, kTol);
  EXPECT_NEAR(kp.shift(MidLabel::kLeft).y, 1, kTol);
  EXPECT_NEAR(kp.radius, std::sqrt(2.0), kTol);

  // Edge midpoints from the corners: each must be one of the four midpoints.
  const auto corners = box_corners(box);
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 m = 0.5 * (corners[i] + corners[(i + 1) % 4]);
    double best = 1e9;
    for (const Point2& p : kp.midpoints) best = std::min(best, distance(p, m));
    EXPECT_LT(best, kTol);
  }
}

TEST(BoxToKeypoints, QuadrantAndAntipodalInvariants) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 2000; ++n) {
    const OrientedBox box = canonicalize(oracle::random_box(rng, 1, 300));
    const KeypointSet kp = box_to_keypoints(box);
    for (MidLabel l : kMidLabels) {
      EXPECT_EQ(quadrant_label(kp.midpoint(l) - kp.center), l);
      // Shift signs invert the encoding exactly.
      const Point2 back = apply_shift(kp.midpoint(l), l, kp.shift(l));
      EXPECT_NEAR(back.x, kp.center.x, 1e-9);
      EXPECT_NEAR(back.y, kp.center.y, 1e-9);
    }
    const Point2 lr = kp.midpoint(MidLabel::kLeft) + kp.midpoint(MidLabel::kRight);
    const Point2 tb = kp.midpoint(MidLabel::kTop) + kp.midpoint(MidLabel::kBottom);
    expect_point(0.5 * lr, kp.center, 1e-9);
    expect_point(0.5 * tb, kp.center, 1e-9);
    const Point2 a = kp.midpoint(MidLabel::kRight) - kp.midpoint(MidLabel::kLeft);
    const Point2 b = kp.midpoint(MidLabel::kBottom) - kp.midpoint(MidLabel::kTop);
    EXPECT_NEAR(dot(a, b) / (norm(a) * norm(b)), 0.0, 1e-9);
    EXPECT_NEAR(kp.radius, std::min(box.w, box.h) / 2, 1e-9);
  }
}

TEST(ShiftSigns, Table) {
  EXPECT_EQ(shift_signs(MidLabel::kLeft).x, 1);
  EXPECT_EQ(shift_signs(MidLabel::kLeft).y, 1);
  EXPECT_EQ(shift_signs(MidLabel::kTop).x, -1);
  EXPECT_EQ(shift_signs(MidLabel::kTop).y, 1);
  EXPECT_EQ(shift_signs(MidLabel::kRight).x, -1);
  EXPECT_EQ(shift_signs(MidLabel::kRight).y, -1);
  EXPECT_EQ(shift_signs(MidLabel::kBottom).x, 1);
  EXPECT_EQ(shift_signs(MidLabel::kBottom).y, -1);
}

TEST(ShiftSigns, PointTowardsCenterFromEachQuadrant) {
  // Enumerate quadrant members and check that the sign pair moves them
  // towards the origin on both axes.
  for (Point2 p : {Point2{-3, -2}, Point2{2, -3}, Point2{3, 2}, Point2{-2, 3}}) {
    const MidLabel l = quadrant_label(p);
    const Point2 back = apply_shift(p, l, {std::abs(p.x), std::abs(p.y)});
    expect_point(back, {0, 0});
  }
}

TEST(RefineCenter, Examples) {
  const ScoredMidpoints same = scored({Point2{10, 10}, {10, 10}, {10, 10}, {10, 10}});
  expect_point(refine_center(same, {{10, 10}, 1.0}), {10, 10});

  const MidpointQuad cross_pts = {Point2{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  expect_point(refine_center(scored(cross_pts), {{0, 0}, 1.0}), {0, 0});
  expect_point(refine_center(scored(cross_pts), {{1, 1}, 4.0}), {0.5, 0.5});
}

TEST(RefineCenter, ScaleInvariantAndInsideHull) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-50, 50), score(0.01, 1.0), scale(0.1, 100.0);
  for (int n = 0; n < 500; ++n) {
    ScoredMidpoints m;
    for (auto& p : m) p = {{pos(rng), pos(rng)}, score(rng)};
    ScoredPoint c{{pos(rng), pos(rng)}, score(rng)};
    const Point2 r = refine_center(m, c);
    const double k = scale(rng);
    ScoredMidpoints m2 = m;
    for (auto& p : m2) p.score *= k;
    const Point2 r2 = refine_center(m2, {c.pos, c.score * k});
    expect_point(r2, r, 1e-9);
    double lo_x = c.pos.x, hi_x = c.pos.x;
    for (const auto& p : m) {
      lo_x = std::min(lo_x, p.pos.x);
      hi_x = std::max(hi_x, p.pos.x);
    }
    EXPECT_GE(r.x, lo_x - 1e-9);
    EXPECT_LE(r.x, hi_x + 1e-9);
  }
}

TEST(RefineCenter, Errors) {
  const MidpointQuad q = {Point2{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  EXPECT_THROW(refine_center(scored(q, {0, 0, 0, 0}), {{0, 0}, 0.0}), Error);
  EXPECT_THROW(refine_center(scored(q, {1, -1, 1, 1}), {{0, 0}, 1.0}), Error);
  try {
    refine_center(scored(q, {0, 0, 0, 0}), {{0, 0}, 0.0});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateWeights);
  }
}

TEST(OrientationObjective, Examples) {
  const KeypointSet kp = box_to_keypoints({{3, 4}, 30, 12, 0.3, 0});
  EXPECT_NEAR(orientation_objective(0.3, kp.center, kp.midpoints), 0.0, 1e-12);

  const MidpointQuad m = {Point2{-1, 0.1}, {0.1, -1}, {1, 0.1}, {0.1, 1}};
  EXPECT_NEAR(orientation_objective(0.0, {0, 0}, m), 0.4, 1e-12);
  EXPECT_NEAR(oracle::axis_deviation(0.0, {0, 0}, m), 0.4, 1e-12);
}

TEST(OrientationObjective, SingleMidpointOnAxisContributesNothing) {
  const MidpointQuad m = {Point2{-5, 0}, {0, 0}, {0, 0}, {0, 0}};
  EXPECT_NEAR(orientation_objective(0.0, {0, 0}, m), 0.0, 1e-12);
}

TEST(OrientationObjective, PeriodPiAndSlopeForm) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(-30, 30), angle(-4, 4);
  for (int n = 0; n < 500; ++n) {
    MidpointQuad m;
    for (auto& p : m) p = {pos(rng), pos(rng)};
    const Point2 c{pos(rng), pos(rng)};
    const double t = angle(rng);
    EXPECT_NEAR(orientation_objective(t, c, m), orientation_objective(t + kPi, c, m), 1e-9);
    EXPECT_NEAR(orientation_objective(t, c, m), oracle::axis_deviation(t, c, m), 1e-9);

    // Slope form with k = tan(theta): line y - yc = k (x - xc) and its normal.
    if (std::abs(std::cos(t)) > 1e-3) {
      const double k = std::tan(t);
      double slope_form = 0.0;
      for (int i : {0, 2}) {
        slope_form += std::abs(k * (m[i].x - c.x) - (m[i].y - c.y)) / std::sqrt(1 + k * k);
      }
      for (int i : {1, 3}) {
        slope_form += std::abs((m[i].x - c.x) + k * (m[i].y - c.y)) / std::sqrt(1 + k * k);
      }
      EXPECT_NEAR(orientation_objective(t, c, m), slope_form, 1e-8);
    }
  }
}

TEST(SolveOrientation, ExactMidpoints) {
  const KeypointSet kp = box_to_keypoints({{50, 60}, 40, 15, 0.3, 0});
  EXPECT_NEAR(solve_orientation(kp.center, kp.midpoints), 0.3, 1e-6);

  const MidpointQuad axis = {Point2{-1, 0}, {0, -1}, {1, 0}, {0, 1}};
  const double t = solve_orientation({0, 0}, axis);
  EXPECT_LT(std::min(t, kPi - t), 1e-8);
}

TEST(SolveOrientation, DegenerateThrows) {
  const MidpointQuad same = {Point2{2, 2}, {2, 2}, {2, 2}, {2, 2}};
  EXPECT_THROW(solve_orientation({2, 2}, same), Error);
}

TEST(SolveOrientation, NoWorseThanDenseGrid) {
  std::mt19937_64 rng(77);
  const oracle::DenseAngleGrid grid(1e-5);
  for (int n = 0; n < 60; ++n) {
    const KeypointSet kp = box_to_keypoints(canonicalize(oracle::random_box(rng, 8, 200)));
    std::normal_distribution<double> noise(0.0, 3.0);
    MidpointQuad m = kp.midpoints;
    for (auto& p : m) p = p + Point2{noise(rng), noise(rng)};
    const Point2 c = kp.center + Point2{noise(rng), noise(rng)};
    const double t = solve_orientation(c, m);
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, kPi);
    EXPECT_LE(orientation_objective(t, c, m), grid.minimum(c, m) + 1e-9);
  }
}

TEST(RefineAndBuild, ExactKeypoints) {
  const OrientedBox box{{200, 150}, 64, 18, 1.1, 3};
  const KeypointSet kp = box_to_keypoints(box);
  const ScoredBox out = refine_and_build(kp.center, 1.1, scored(kp.midpoints), 1.0, 3);
  EXPECT_GE(rotated_iou(out.box, canonicalize(box)), 0.999);
  EXPECT_DOUBLE_EQ(out.score, 1.0);
  EXPECT_EQ(out.box.class_id, 3);
}

TEST(RefineAndBuild, OutwardLeftMidpoint) {
  KeypointSet kp = box_to_keypoints({{100, 100}, 40, 20, 0, 0});
  kp.midpoints[index_of(MidLabel::kLeft)].x -= 2.0;
  const ScoredBox out = refine_and_build(kp.center, 0.0, scored(kp.midpoints), 1.0, 0);
  // Half-extents 22 and 20 average to 21, so the full width is 42.
  EXPECT_NEAR(out.box.w, 42.0, 1e-12);
  EXPECT_NEAR(out.box.h, 20.0, 1e-12);
}

TEST(RefineAndBuild, ZeroWeightUsesPartner) {
  KeypointSet kp = box_to_keypoints({{100, 100}, 40, 20, 0, 0});
  kp.midpoints[index_of(MidLabel::kLeft)].x -= 7.0;
  const ScoredBox out =
      refine_and_build(kp.center, 0.0, scored(kp.midpoints, {0, 1, 1, 1}), 1.0, 0);
  EXPECT_NEAR(out.box.w, 40.0, 1e-12);
  EXPECT_NEAR(out.score, 0.8, 1e-12);
}

TEST(RefineAndBuild, Errors) {
  const KeypointSet kp = box_to_keypoints({{100, 100}, 40, 20, 0, 0});
  EXPECT_THROW(refine_and_build(kp.center, 0.0, scored(kp.midpoints, {0, 1, 0, 1}), 1.0, 0),
               Error);
  const MidpointQuad flat = {Point2{100, 100}, {100, 90}, {100, 100}, {100, 110}};
  try {
    refine_and_build({100, 100}, 0.0, scored(flat), 1.0, 0);
    FAIL() << "expected a degenerate box";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateBox);
  }
}

TEST(RoundTrip, RandomBoxes) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 1000; ++n) {
    const OrientedBox box = canonicalize(oracle::random_box(rng, 8, 400));
    const KeypointSet kp = box_to_keypoints(box);
    const Point2 c = refine_center(shifted(kp), {kp.center, 1.0});
    const double t = solve_orientation(c, kp.midpoints);
    const ScoredBox out = refine_and_build(c, t, scored(kp.midpoints), 1.0, 0);
    EXPECT_GE(rotated_iou(out.box, box), 0.999);
    EXPECT_LE(axis_angle_error(out.box, box), 1e-4);
  }
}

TEST(BuildBoxSimple, ExactMidpoints) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 200; ++n) {
    const OrientedBox box = canonicalize(oracle::random_box(rng, 5, 200));
    const OrientedBox out = build_box_simple(positions(box_to_keypoints(box)), 2);
    EXPECT_GE(rotated_iou(out, box), 0.999999);
    EXPECT_EQ(out.class_id, 2);
  }
}

TEST(BuildBoxSimple, UnitSquare) {
  const OrientedBox out = build_box_simple(positions(box_to_keypoints({{0, 0}, 2, 2, 0, 0})), 0);
  expect_point(out.center, {0, 0});
  EXPECT_NEAR(out.w, 2, kTol);
  EXPECT_NEAR(out.h, 2, kTol);
  EXPECT_NEAR(std::min(out.theta, kHalfPi - out.theta), 0.0, kTol);
}

TEST(BuildBoxSimple, EnclosesParallelogram) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int n = 0; n < 300; ++n) {
    const OrientedBox box = canonicalize(oracle::random_box(rng, 20, 200));
    MidpointQuad m = positions(box_to_keypoints(box));
    for (auto& p : m) p = p + Point2{noise(rng), noise(rng)};
    const OrientedBox out = build_box_simple(m, 0);
    OrientedBox grown = out;
    grown.w += 1e-6;
    grown.h += 1e-6;
    for (const Point2& corner : midpoint_parallelogram(m)) {
      EXPECT_TRUE(oracle::inside_box(grown, corner.x, corner.y));
    }
  }
}

TEST(BuildBoxSimple, ParallelAxesThrow) {
  const MidpointQuad m = {Point2{0, 0}, {0, 1}, {2, 0}, {2, 1}};
  EXPECT_THROW(build_box_simple(m, 0), Error);
}

TEST(MinAreaRect, Rejects) {
  const std::vector<Point2> collinear = {{0, 0}, {1, 1}, {2, 2}};
  EXPECT_THROW(min_area_rect(collinear), Error);
}

}  // namespace
}  // namespace midbox
