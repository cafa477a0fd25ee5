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
#include "midbox/heatmap.hpp"
#include "oracles.hpp"

namespace midbox {
namespace {

TEST(RenderGaussian, PeakAndSigmaValues) {
  Tensor heat({1, 16, 16});
  EXPECT_FALSE(render_gaussian(heat, 0, {5, 5}, 2.0));
  EXPECT_FLOAT_EQ(heat.at(0, 5, 5), 1.0f);
  EXPECT_NEAR(heat.at(0, 5, 7), std::exp(-0.5), 1e-7);
  EXPECT_NEAR(heat.at(0, 3, 5), std::exp(-0.5), 1e-7);
  // Outside 3 sigma nothing is written.
  EXPECT_EQ(heat.at(0, 5, 12), 0.0f);
  EXPECT_GT(heat.at(0, 5, 11), 0.0f);
}

TEST(RenderGaussian, MaxCompositionIsOrderFree) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pos(0, 31);
  std::uniform_real_distribution<double> sig(0.5, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<GridPoint, double>> g(6);
    for (auto& e : g) e = {{pos(rng), pos(rng)}, sig(rng)};
    Tensor a({1, 32, 32});
    Tensor b({1, 32, 32});
    for (const auto& e : g) render_gaussian(a, 0, e.first, e.second);
    for (auto it = g.rbegin(); it != g.rend(); ++it) render_gaussian(b, 0, it->first, it->second);
    EXPECT_EQ(a, b);
    for (float v : a.data()) EXPECT_LE(v, 1.0f);
  }
}

TEST(RenderGaussian, OverlapTakesMaxNotSum) {
  Tensor heat({1, 9, 9});
  render_gaussian(heat, 0, {4, 4}, 2.0);
  render_gaussian(heat, 0, {4, 4}, 2.0);
  EXPECT_FLOAT_EQ(heat.at(0, 4, 4), 1.0f);
}

TEST(RenderGaussian, ClampsOutOfGridCenter) {
  Tensor heat({1, 8, 8});
  Diagnostics diag;
  EXPECT_TRUE(render_gaussian(heat, 0, {-3, 20}, 1.0, &diag));
  EXPECT_FLOAT_EQ(heat.at(0, 7, 0), 1.0f);
  EXPECT_EQ(diag.warnings.size(), 1u);
  EXPECT_THROW(render_gaussian(heat, 0, {1, 1}, 0.0), Error);
}

TEST(EncodeTargets, ShapesAndRadius) {
  const std::vector<OrientedBox> boxes = {{{50, 50}, 40, 20, 0.0, 0}};
  const TargetSet t = encode_targets(boxes, {101, 64}, 4, 3);
  EXPECT_EQ(t.center_heat.shape(), (Shape3{3, 16, 26}));
  EXPECT_EQ(t.mid_heat.shape(), (Shape3{12, 16, 26}));
  EXPECT_EQ(t.shift_map.shape(), (Shape3{8, 16, 26}));
  EXPECT_EQ(t.radius_map.shape(), (Shape3{1, 16, 26}));
  EXPECT_EQ(t.pos_mask.shape(), (Shape3{5, 16, 26}));
  EXPECT_FLOAT_EQ(t.radius_map.at(0, 12, 12), 2.5f);
  EXPECT_FLOAT_EQ(t.pos_mask.at(4, 12, 12), 1.0f);
  EXPECT_FLOAT_EQ(t.center_heat.at(0, 12, 12), 1.0f);
  // l midpoint at (30, 50): cell (7, 12), shift (20, 0) / 4.
  EXPECT_FLOAT_EQ(t.shift_map.at(0, 12, 7), 5.0f);
  EXPECT_FLOAT_EQ(t.shift_map.at(1, 12, 7), 0.0f);
  EXPECT_FLOAT_EQ(t.mid_heat.at(0, 12, 7), 1.0f);
}

TEST(EncodeTargets, EmptyIsAllZero) {
  const TargetSet t = encode_targets({}, {64, 64}, 4, 2);
  for (const Tensor* x : {&t.center_heat, &t.mid_heat, &t.shift_map, &t.radius_map, &t.pos_mask}) {
    for (float v : x->data()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(EncodeTargets, SkipsBadBoxesWithDiagnostics) {
  const std::vector<OrientedBox> boxes = {{{50, 50}, 0, 20, 0.0, 0}, {{50, 50}, 10, 20, 0.0, 5}};
  Diagnostics diag;
  const TargetSet t = encode_targets(boxes, {64, 64}, 4, 1, &diag);
  EXPECT_EQ(diag.warnings.size(), 2u);
  for (float v : t.pos_mask.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(encode_targets(boxes, {64, 64}, 0, 1), Error);
}

TEST(EncodeTargets, InvariantsOnRandomScenes) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<OrientedBox> boxes;
    for (int n = 0; n < 10; ++n) {
      OrientedBox b = oracle::random_box(rng, 8, 60, 200);
      b.center = {20 + b.center.x * 0.8, 20 + b.center.y * 0.8};
      b.class_id = n % 2;
      boxes.push_back(b);
    }
    const TargetSet t = encode_targets(boxes, {240, 240}, 4, 2);
    EXPECT_NO_THROW(t.validate());
    for (float v : t.center_heat.data()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
    for (float v : t.mid_heat.data()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
    for (float v : t.shift_map.data()) EXPECT_GE(v, 0.0f);
    for (float v : t.radius_map.data()) EXPECT_GE(v, 0.0f);
    for (float v : t.pos_mask.data()) EXPECT_TRUE(v == 0.0f || v == 1.0f);
  }
}

TEST(ExtractPeaks, SingleAndZero) {
  Tensor heat({2, 20, 20});
  render_gaussian(heat, 1, {7, 4}, 1.5);
  const auto peaks = extract_peaks(heat, 10, 0.1);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].channel, 1u);
  EXPECT_EQ(peaks[0].x, 7);
  EXPECT_EQ(peaks[0].y, 4);
  EXPECT_TRUE(extract_peaks(Tensor({1, 5, 5}), 10, 0.0).empty());
  EXPECT_THROW(extract_peaks(heat, 0, 0.1), Error);
}

TEST(ExtractPeaks, TwoGaussiansTenApart) {
  Tensor heat({1, 30, 30});
  render_gaussian(heat, 0, {10, 12}, 1.0);
  render_gaussian(heat, 0, {20, 12}, 1.0);
  const auto peaks = extract_peaks(heat, 10, 0.1);
  ASSERT_EQ(peaks.size(), 2u);
  // Exhaustive scan oracle: strict local maxima of the map.
  std::vector<std::pair<int, int>> expected;
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 30; ++x) {
      bool top = heat.at(0, y, x) > 0.1f;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if ((dx || dy) && yy >= 0 && xx >= 0 && yy < 30 && xx < 30 &&
              heat.at(0, yy, xx) >= heat.at(0, y, x))
            top = false;
        }
      if (top) expected.emplace_back(x, y);
    }
  }
  ASSERT_EQ(expected.size(), 2u);
  EXPECT_EQ(std::make_pair(peaks[0].x, peaks[0].y), expected[0]);
  EXPECT_EQ(std::make_pair(peaks[1].x, peaks[1].y), expected[1]);
}

TEST(ExtractPeaks, TopKAndOrdering) {
  Tensor heat({1, 10, 10});
  heat.at(0, 1, 1) = 0.5f;
  heat.at(0, 1, 5) = 0.9f;
  heat.at(0, 5, 1) = 0.5f;
  heat.at(0, 8, 8) = 0.05f;
  auto peaks = extract_peaks(heat, 10, 0.1);
  ASSERT_EQ(peaks.size(), 3u);
  EXPECT_EQ(peaks[0].x, 5);
  EXPECT_EQ(peaks[1].y, 1);  // equal scores: row-major
  EXPECT_EQ(peaks[2].y, 5);
  EXPECT_EQ(extract_peaks(heat, 2, 0.1).size(), 2u);
  // Plateaus keep every tied pixel.
  Tensor flat({1, 3, 3}, 0.5f);
  EXPECT_EQ(extract_peaks(flat, 100, 0.1).size(), 9u);
}

TEST(ExtractPeaks, OnePeakPerSeparatedGaussian) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pos(0, 63);
  for (int trial = 0; trial < 30; ++trial) {
    const double sigma = 1.5;
    std::vector<GridPoint> placed;
    while (placed.size() < 5) {
      const GridPoint p{pos(rng), pos(rng)};
      bool ok = true;
      for (const GridPoint& q : placed) {
        ok = ok && std::hypot(p.x - q.x, p.y - q.y) > 6 * sigma + 1e-9;
      }
      if (ok) placed.push_back(p);
    }
    Tensor heat({1, 64, 64});
    for (const GridPoint& p : placed) render_gaussian(heat, 0, p, sigma);
    const auto peaks = extract_peaks(heat, 100, 0.0);
    EXPECT_EQ(peaks.size(), placed.size());
  }
}

TEST(DecodeMaps, RoundTripOneBox) {
  for (int stride : {1, 2, 4, 8}) {
    const OrientedBox box = canonicalize({{123.4, 77.7}, 60, 24, 0.7, 1});
    const std::vector<OrientedBox> boxes = {box};
    const TargetSet t = encode_targets(boxes, {256, 200}, stride, 2);
    const KeypointDetections kp = decode_maps(t, stride, 100, {0.5, 0.5});
    const KeypointSet truth = box_to_keypoints(box);
    ASSERT_EQ(kp.centers.size(), 1u);
    ASSERT_EQ(kp.midpoints.size(), 4u);
    const double tol = stride / 2.0 + 1e-9;
    EXPECT_NEAR(kp.centers[0].pos.x, truth.center.x, tol);
    EXPECT_NEAR(kp.centers[0].pos.y, truth.center.y, tol);
    EXPECT_NEAR(kp.centers[0].radius, std::max(1.0, truth.radius), 1e-4);
    EXPECT_EQ(kp.centers[0].class_id, 1);
    EXPECT_FLOAT_EQ(float(kp.centers[0].score), 1.0f);
    for (const MidpointDet& m : kp.midpoints) {
      const Point2 p = truth.midpoint(m.label);
      EXPECT_NEAR(m.pos.x, p.x, tol);
      EXPECT_NEAR(m.pos.y, p.y, tol);
      EXPECT_NEAR(m.shift.x, truth.shift(m.label).x, 1e-4);
      EXPECT_NEAR(m.shift.y, truth.shift(m.label).y, 1e-4);
      EXPECT_EQ(m.class_id, 1);
      EXPECT_FLOAT_EQ(float(m.score), 1.0f);
    }
  }
}

TEST(DecodeMaps, ThresholdAboveOneIsEmpty) {
  const std::vector<OrientedBox> boxes = {{{50, 50}, 40, 20, 0.0, 0}};
  const TargetSet t = encode_targets(boxes, {100, 100}, 4, 1);
  const KeypointDetections kp = decode_maps(t, 4, 100, {1.1, 1.1});
  EXPECT_TRUE(kp.centers.empty());
  EXPECT_TRUE(kp.midpoints.empty());
}

TEST(DecodeMaps, StrideOneHalfPixel) {
  const std::vector<OrientedBox> boxes = {{{40, 30}, 20, 10, 0.0, 0}};
  const TargetSet t = encode_targets(boxes, {80, 60}, 1, 1);
  const KeypointDetections kp = decode_maps(t, 1, 100, {0.5, 0.5});
  ASSERT_EQ(kp.centers.size(), 1u);
  EXPECT_NEAR(kp.centers[0].pos.x, 40, 0.5);
  EXPECT_NEAR(kp.centers[0].pos.y, 30, 0.5);
}

TEST(DecodeMaps, ShapeMismatch) {
  TargetSet t = encode_targets({}, {40, 40}, 4, 1);
  t.shift_map = Tensor({7, 10, 10});
  EXPECT_THROW(decode_maps(t, 4, 10, {}), Error);
}

TEST(FocalLoss, Examples) {
  const Tensor target({1, 1, 1}, 1.0f);
  EXPECT_NEAR(focal_loss(Tensor({1, 1, 1}, 0.5f), target), -0.25 * std::log(0.5), 1e-9);
  EXPECT_NEAR(focal_loss(Tensor({1, 1, 1}, 1.0f), target), 0.0, 1e-10);

  Tensor t({1, 8, 8});
  render_gaussian(t, 0, {3, 3}, 1.0);
  Tensor p = t;
  for (float& v : p.data()) v = v == 1.0f ? 1.0f : 0.0f;
  EXPECT_NEAR(focal_loss(p, t), 0.0, 1e-9);
  EXPECT_THROW(focal_loss(Tensor({1, 2, 2}), t), Error);
}

TEST(FocalLoss, NonNegativeAndPerPeakNormalised) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor t({1, 16, 16});
  render_gaussian(t, 0, {4, 4}, 1.5);
  Tensor p({1, 16, 16});
  for (float& v : p.data()) v = u(rng);
  const double single = focal_loss(p, t);
  EXPECT_GE(single, 0.0);

  // Tile the same map four times: four peaks, same per-peak loss.
  Tensor t4({1, 32, 32});
  Tensor p4({1, 32, 32});
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) {
      t4.at(0, y, x) = t.at(0, y % 16, x % 16);
      p4.at(0, y, x) = p.at(0, y % 16, x % 16);
    }
  EXPECT_NEAR(focal_loss(p4, t4), single, 1e-9 * std::max(1.0, single));
}

TEST(L1Masked, Examples) {
  Tensor a({1, 2, 2}, 1.0f);
  Tensor mask({1, 2, 2});
  EXPECT_EQ(l1_masked(a, a, mask), 0.0);
  Tensor b = a;
  b.at(0, 1, 1) = 3.0f;
  mask.at(0, 1, 1) = 1.0f;
  EXPECT_DOUBLE_EQ(l1_masked(a, b, mask), 2.0);
  EXPECT_DOUBLE_EQ(l1_masked(a, b, Tensor({1, 2, 2})), 0.0);
}

TEST(TotalLoss, Examples) {
  EXPECT_EQ(total_loss({1, 1, 1, 1}), 2.75);
  EXPECT_EQ(total_loss({0, 0, 0, 0}), 0.0);
  EXPECT_EQ(total_loss({2, 0, 0, 4}), 3.0);
  EXPECT_THROW(total_loss({1, -1, 0, 0}), Error);
}

TEST(ComputeLossParts, PerfectShiftAndRadius) {
  const std::vector<OrientedBox> boxes = {{{50, 50}, 40, 20, 0.3, 0}};
  const TargetSet t = encode_targets(boxes, {100, 100}, 4, 1);
  const LossParts parts = compute_loss_parts(t, t);
  EXPECT_EQ(parts.shift, 0.0);
  EXPECT_EQ(parts.radius, 0.0);
  EXPECT_GE(parts.midpoint, 0.0);
  EXPECT_GE(parts.center, 0.0);
  EXPECT_EQ(shift_mask(t.pos_mask).channels(), 8u);
}

}  // namespace
}  // namespace midbox
