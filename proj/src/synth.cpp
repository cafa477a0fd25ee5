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

#include "midbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "midbox/error.hpp"
#include "midbox/eval.hpp"

namespace midbox {

namespace {

std::mt19937_64 scene_rng(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(idx),
                    std::uint32_t(idx >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool inside_canvas(const OrientedBox& box, int width, int height) {
  for (const Point2& p : box_corners(box)) {
    if (p.x < 0.0 || p.y < 0.0 || p.x > width || p.y > height) return false;
  }
  return true;
}

std::vector<OrientedBox> random_layout(const SceneSpec& spec, std::mt19937_64& rng) {
  std::vector<OrientedBox> boxes;
  std::uniform_int_distribution<int> cls(0, spec.num_classes - 1);
  const std::size_t max_attempts = 1000 * std::max<std::size_t>(1, spec.object_count);
  std::size_t attempts = 0;
  while (boxes.size() < spec.object_count) {
    if (++attempts > max_attempts) {
      throw Error(ErrorKind::kInvalidArgument,
                  "cannot place " + std::to_string(spec.object_count) +
                      " non-overlapping objects on the canvas");
    }
    OrientedBox b;
    b.w = uniform(rng, spec.length_min, spec.length_max);
    b.h = uniform(rng, spec.beam_min, spec.beam_max);
    b.theta = uniform(rng, spec.angle_min, spec.angle_max);
    const double c = std::abs(std::cos(b.theta));
    const double s = std::abs(std::sin(b.theta));
    const double ex = (c * b.w + s * b.h) / 2.0;
    const double ey = (s * b.w + c * b.h) / 2.0;
    if (2.0 * ex > spec.width || 2.0 * ey > spec.height) continue;
    b.center = {uniform(rng, ex, spec.width - ex), uniform(rng, ey, spec.height - ey)};
    b.class_id = cls(rng);

    OrientedBox padded = b;
    padded.w += spec.gap;
    padded.h += spec.gap;
    const bool clash = std::any_of(boxes.begin(), boxes.end(), [&](const OrientedBox& o) {
      return rotated_iou(padded, o) > 0.0;
    });
    if (!clash) boxes.push_back(canonicalize(b));
  }
  return boxes;
}

std::vector<OrientedBox> harbor_layout(const SceneSpec& spec, std::mt19937_64& rng) {
  const std::size_t per_row = std::max<std::size_t>(1, spec.ships_per_row);
  const std::size_t rows = (spec.object_count + per_row - 1) / per_row;
  std::uniform_int_distribution<int> cls(0, spec.num_classes - 1);

  // Local frame: ship axis along +x, ships of a row stacked along +y.
  struct Local {
    Point2 center;
    double length, beam;
    int class_id;
  };
  std::vector<Local> ships;
  double max_row_span = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double y = 0.0;
    const std::size_t in_row = std::min(per_row, spec.object_count - r * per_row);
    for (std::size_t j = 0; j < in_row; ++j) {
      Local s;
      s.length = uniform(rng, spec.length_min, spec.length_max);
      s.beam = uniform(rng, spec.beam_min, spec.beam_max);
      s.class_id = cls(rng);
      if (j > 0) y += spec.gap;
      s.center = {double(r) * (spec.length_max + spec.gap), y + s.beam / 2.0};
      y += s.beam;
      ships.push_back(s);
    }
    max_row_span = std::max(max_row_span, y);
  }
  const Point2 middle{double(rows - 1) * (spec.length_max + spec.gap) / 2.0, max_row_span / 2.0};

  const double phi = uniform(rng, spec.angle_min, spec.angle_max);
  const Point2 u = direction(phi);
  const Point2 v{-u.y, u.x};
  const Point2 canvas_mid{spec.width / 2.0, spec.height / 2.0};

  std::vector<OrientedBox> boxes;
  for (const Local& s : ships) {
    const Point2 rel = s.center - middle;
    OrientedBox b;
    b.center = canvas_mid + rel.x * u + rel.y * v;
    b.w = s.length;
    b.h = s.beam;
    b.theta = phi;
    b.class_id = s.class_id;
    b = canonicalize(b);
    if (!inside_canvas(b, spec.width, spec.height)) {
      throw Error(ErrorKind::kInvalidArgument, "harbor layout does not fit on the canvas");
    }
    boxes.push_back(b);
  }
  return boxes;
}

}  // namespace

void SceneSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::kInvalidArgument, what);
  };
  require(width > 0 && height > 0, "canvas size must be positive");
  require(length_min > 0.0 && length_min <= length_max, "need 0 < length_min <= length_max");
  require(beam_min > 0.0 && beam_min <= beam_max, "need 0 < beam_min <= beam_max");
  require(angle_min <= angle_max, "need angle_min <= angle_max");
  require(gap >= 0.0, "gap must be non-negative");
  require(num_classes >= 1, "need at least one class");
  require(noise.jitter_sigma >= 0.0, "jitter sigma must be non-negative");
  require(noise.drop_prob >= 0.0 && noise.drop_prob <= 1.0, "drop probability must be in [0,1]");
  require(noise.spurious_rate >= 0.0, "spurious rate must be non-negative");
  require(noise.score_floor >= 0.0 && noise.score_floor <= noise.spurious_score_max &&
              noise.spurious_score_max <= 1.0,
          "need 0 <= score_floor <= spurious_score_max <= 1");
}

double jitter_score(double jitter, const NoiseModel& noise) {
  constexpr double kEps = 1e-9;
  return std::clamp(1.0 - jitter / (6.0 * noise.jitter_sigma + kEps), noise.score_floor, 1.0);
}

ImageKeypoints perturb_keypoints(std::span<const OrientedBox> boxes, const NoiseModel& noise,
                                 int width, int height, int num_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise.jitter_sigma > 0.0 ? noise.jitter_sigma : 1.0);
  std::bernoulli_distribution dropped(noise.drop_prob);
  auto jitter = [&]() -> Point2 {
    if (noise.jitter_sigma <= 0.0) return {0.0, 0.0};
    const double x = normal(rng);
    const double y = normal(rng);
    return {x, y};
  };

  ImageKeypoints out;
  out.width = width;
  out.height = height;
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    const KeypointSet kp = box_to_keypoints(boxes[n]);
    const int cls = boxes[n].class_id;
    const int object = static_cast<int>(n);

    if (!dropped(rng)) {
      const Point2 j = jitter();
      out.centers.push_back({kp.center + j, jitter_score(norm(j), noise), kp.radius, cls});
      out.center_object.push_back(object);
    }
    for (MidLabel label : kMidLabels) {
      if (dropped(rng)) continue;
      const Point2 j = jitter();
      const Point2 sj = jitter();
      const CentripetalShift cs = kp.shift(label);
      MidpointDet m;
      m.label = label;
      m.pos = kp.midpoint(label) + j;
      m.score = jitter_score(norm(j), noise);
      m.shift = {std::max(0.0, cs.x + sj.x), std::max(0.0, cs.y + sj.y)};
      m.class_id = cls;
      out.midpoints.push_back(m);
      out.midpoint_object.push_back(object);
    }
  }

  if (noise.spurious_rate > 0.0) {
    const int count = std::poisson_distribution<int>(noise.spurious_rate)(rng);
    std::uniform_int_distribution<int> role(0, 4);
    std::uniform_int_distribution<int> cls(0, std::max(0, num_classes - 1));
    for (int i = 0; i < count; ++i) {
      const int r = role(rng);
      const Point2 pos{uniform(rng, 0.0, width), uniform(rng, 0.0, height)};
      const double score = uniform(rng, noise.score_floor, noise.spurious_score_max);
      const int c = cls(rng);
      if (r == 4) {
        out.centers.push_back({pos, score, uniform(rng, 4.0, 40.0), c});
        out.center_object.push_back(-1);
      } else {
        MidpointDet m;
        m.label = kMidLabels[static_cast<std::size_t>(r)];
        m.pos = pos;
        m.score = score;
        m.shift = {uniform(rng, 0.0, 60.0), uniform(rng, 0.0, 60.0)};
        m.class_id = c;
        out.midpoints.push_back(m);
        out.midpoint_object.push_back(-1);
      }
    }
  }
  return out;
}

Scene generate_scene(const SceneSpec& spec, std::size_t index) {
  spec.validate();
  std::mt19937_64 rng = scene_rng(spec.seed, index);
  const std::vector<OrientedBox> boxes =
      spec.layout == Layout::kHarborRows ? harbor_layout(spec, rng) : random_layout(spec, rng);

  char id[32];
  std::snprintf(id, sizeof(id), "scene_%05zu", index);

  Scene scene;
  scene.truth.image = id;
  scene.truth.width = spec.width;
  scene.truth.height = spec.height;
  for (const OrientedBox& b : boxes) scene.truth.objects.push_back({b, false, {}, {}});

  scene.keypoints = perturb_keypoints(boxes, spec.noise, spec.width, spec.height,
                                      spec.num_classes, rng());
  scene.keypoints.image = id;
  return scene;
}

}  // namespace midbox
