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

// Training targets (heatmaps, shift and radius maps) from annotations, peak
// decoding of predicted maps back into keypoint detections, and the
// multi-task loss.

#include <cstddef>
#include <span>
#include <vector>

#include "midbox/error.hpp"
#include "midbox/geometry.hpp"
#include "midbox/matcher.hpp"
#include "midbox/tensor.hpp"

namespace midbox {

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Target (or prediction) maps for one image on a grid of
/// ceil(H/stride) x ceil(W/stride) cells.
///   center_heat [K, H, W]
///   mid_heat    [4K, H, W]  channel 4k + label (l, t, r, b)
///   shift_map   [8, H, W]   (dx, dy) per label in stride units, class-agnostic
///   radius_map  [1, H, W]   stride units
///   pos_mask    [5, H, W]   exact keypoint cells for l, t, r, b, center
struct TargetSet {
  Tensor center_heat;
  Tensor mid_heat;
  Tensor shift_map;
  Tensor radius_map;
  Tensor pos_mask;

  std::size_t num_classes() const { return center_heat.channels(); }
  /// Throws kShapeMismatch unless all five tensors agree with the layout above.
  void validate() const;
};

struct GridPoint {
  int x = 0;
  int y = 0;
};

/// Max-composes exp(-d^2 / (2 sigma^2)) over pixels within 3 sigma of
/// `center`. Out-of-grid centers are clamped onto the grid; returns true
/// (and records a warning) when that happened.
bool render_gaussian(Tensor& heat, std::size_t channel, GridPoint center, double sigma,
                     Diagnostics* diag = nullptr);

/// Gaussian spread used for a keypoint of an object with matching radius
/// `radius` (image pixels).
double gaussian_sigma(double radius, int stride);

TargetSet encode_targets(std::span<const OrientedBox> annotations, ImageSize image, int stride,
                         int num_classes, Diagnostics* diag = nullptr);

struct Peak {
  std::size_t channel = 0;
  int x = 0;
  int y = 0;
  float score = 0.0f;
};

/// Local maxima over the 3x3 neighbourhood (plateaus kept) with a positive
/// score of at least `thresh`; at most `topk` per channel. Ordered by score
/// descending, then channel-major row-major position.
std::vector<Peak> extract_peaks(const Tensor& heat, std::size_t topk, double thresh);

struct KeypointDetections {
  std::vector<CenterDet> centers;
  std::vector<MidpointDet> midpoints;
};

/// Peaks become detections at the pixel-cell centers (p + 0.5) * stride with
/// shift and radius read at the peak cell and scaled back to pixels; radii
/// are clamped to at least one pixel.
KeypointDetections decode_maps(const TargetSet& pred, int stride, std::size_t topk,
                               const GroupThresholds& thresholds);

struct LossWeights {
  double alpha = 0.5;   // center heatmap term
  double beta = 0.25;   // radius term
  double focal_a = 2.0;
  double focal_b = 4.0;
};

/// Penalty-reduced focal loss, normalised by the number of target cells equal
/// to one. Predictions are clamped to [1e-6, 1 - 1e-6].
double focal_loss(const Tensor& pred, const Tensor& target, const LossWeights& weights = {});

/// sum(mask * |pred - target|) / max(1, sum(mask)).
double l1_masked(const Tensor& pred, const Tensor& target, const Tensor& mask);

struct LossParts {
  double midpoint = 0.0;  // focal, midpoint heatmaps
  double center = 0.0;    // focal, center heatmaps
  double shift = 0.0;     // L1, centripetal shifts
  double radius = 0.0;    // L1, matching radius
};

/// midpoint + alpha * center + shift + beta * radius. Throws
/// kInvalidArgument on a negative part.
double total_loss(const LossParts& parts, const LossWeights& weights = {});

/// pos_mask [5,H,W] expanded to the [8,H,W] shift layout.
Tensor shift_mask(const Tensor& pos_mask);

/// Loss parts of squashed predictions against targets.
LossParts compute_loss_parts(const TargetSet& pred, const TargetSet& target,
                             const LossWeights& weights = {});

}  // namespace midbox
