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

// Rotated IoU by convex polygon clipping and VOC07 11-point average
// precision.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "midbox/geometry.hpp"

namespace midbox {

/// Convex polygon, counter-clockwise in math orientation (clockwise on
/// screen with y down). Empty means no area.
using Polygon = std::vector<Point2>;

Polygon box_to_polygon(const OrientedBox& box);

/// Shoelace area (absolute value).
double polygon_area(const Polygon& poly);

/// Sutherland-Hodgman clip of `subject` against the half-planes of
/// `clipper`. Results with area below 1e-12 are returned empty.
Polygon convex_clip(const Polygon& subject, const Polygon& clipper);

double rotated_iou(const OrientedBox& a, const OrientedBox& b);

struct DetectionRecord {
  std::string image_id;
  OrientedBox box;  // canonical, carries the class id
  double score = 0.0;
};

struct GroundTruth {
  std::string image_id;
  OrientedBox box;
  bool difficult = false;
};

enum class MatchOutcome { kTruePositive, kFalsePositive, kIgnored };

struct MatchedDetection {
  std::size_t detection = 0;  // index into the input list
  MatchOutcome outcome = MatchOutcome::kFalsePositive;
  std::optional<std::size_t> ground_truth;
  double iou = 0.0;
};

inline constexpr double kDefaultIouThreshold = 0.5;

/// Greedy matching in descending score order (ties by input order). Each
/// detection takes the still-unmatched same-image, same-class ground truth of
/// highest IoU; at or above `iou_thr` it is a true positive, otherwise a false
/// positive. A detection whose best candidate is a difficult ground truth is
/// ignored. Output is in processing order.
std::vector<MatchedDetection> match_detections(std::span<const DetectionRecord> dets,
                                               std::span<const GroundTruth> gts, double iou_thr);

/// 11-point interpolated AP over recall levels 0, 0.1, ..., 1 for outcomes in
/// descending score order. Ignored entries are skipped. Throws
/// kInvalidArgument when num_gt is zero but true positives are present.
double ap_voc07(std::span<const MatchOutcome> ordered, std::size_t num_gt);

double mean_ap(std::span<const double> per_class_ap);

struct ClassReport {
  int class_id = 0;
  double ap = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t num_gt = 0;
};

struct EvalReport {
  std::vector<ClassReport> classes;  // classes present in the ground truth, ascending
  double map = 0.0;
};

EvalReport evaluate_voc07(std::span<const DetectionRecord> dets, std::span<const GroundTruth> gts,
                          double iou_thr = kDefaultIouThreshold);

}  // namespace midbox
