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

#pragma once

// Seeded synthetic scenes: ground-truth boxes plus keypoint detections derived
// from them through a simple noise model.

#include <cstddef>
#include <cstdint>
#include <span>

#include "midbox/formats.hpp"

namespace midbox {

enum class Layout {
  kRandom,       // non-overlapping boxes placed uniformly
  kHarborRows,   // parallel ships moored side by side in rows
};

struct NoiseModel {
  double jitter_sigma = 0.0;    // px, isotropic, applied to positions and shifts
  double drop_prob = 0.0;       // per keypoint
  double spurious_rate = 0.0;   // expected spurious keypoints per image (Poisson)
  double score_floor = 0.05;
  double spurious_score_max = 0.3;
};

struct SceneSpec {
  int width = 1024;
  int height = 1024;
  std::size_t object_count = 20;
  Layout layout = Layout::kRandom;
  double gap = 5.0;                // px between neighbouring hulls (harbor rows)
  std::size_t ships_per_row = 10;  // harbor rows
  double length_min = 40.0;        // extent along the ship axis
  double length_max = 160.0;
  double beam_min = 10.0;          // extent across the ship axis
  double beam_max = 40.0;
  double angle_min = 0.0;          // radians, uniform
  double angle_max = 3.14159265358979323846;
  int num_classes = 1;
  NoiseModel noise;
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument for out-of-range parameters.
  void validate() const;
};

struct Scene {
  ImageAnnotation truth;
  ImageKeypoints keypoints;
};

/// Scene `index` of the run seeded by spec.seed. Each index draws from its
/// own generator, so scenes can be produced in any order or concurrently.
/// Throws kInvalidArgument when the layout does not fit on the canvas.
Scene generate_scene(const SceneSpec& spec, std::size_t index);

/// Keypoints of `boxes` perturbed by `noise`, with provenance indices.
ImageKeypoints perturb_keypoints(std::span<const OrientedBox> boxes, const NoiseModel& noise,
                                 int width, int height, int num_classes, std::uint64_t seed);

/// Score assigned to a keypoint whose position moved by `jitter` px.
double jitter_score(double jitter, const NoiseModel& noise);

}  // namespace midbox
