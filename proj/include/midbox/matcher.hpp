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

// Grouping of predicted centers and midpoints into objects, and the
// end-to-end decode from keypoint detections to scored oriented boxes.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "midbox/geometry.hpp"

namespace midbox {

struct MidpointDet {
  MidLabel label = MidLabel::kLeft;
  Point2 pos;
  double score = 0.0;
  CentripetalShift shift;  // magnitudes, signs come from the label
  int class_id = 0;
};

struct CenterDet {
  Point2 pos;
  double score = 0.0;
  double radius = 1.0;  // matching radius, pixels
  int class_id = 0;
};

struct GroupedObject {
  CenterDet center;
  std::array<MidpointDet, 4> chosen;  // indexed by MidLabel
  std::size_t center_index = 0;       // position in the input center list
  std::array<std::size_t, 4> midpoint_index{};
};

struct GroupThresholds {
  double center = 0.1;
  double midpoint = 0.1;
};

/// Midpoint position moved by its centripetal shift onto the center it
/// points at.
inline Point2 shifted_position(const MidpointDet& det) {
  return apply_shift(det.pos, det.label, det.shift);
}

/// Adaptive grouping:
///  1. centers and midpoints scoring below their thresholds are dropped;
///  2. every midpoint is assigned to the same-class center nearest to its
///     shifted position, and kept only if that distance is within the
///     center's radius;
///  3. per center and label the highest-scoring midpoint survives (ties:
///     smaller distance, then input order);
///  4. centers holding all four labels become objects, ordered by center
///     score descending (ties by input order).
/// Nearest-center search is brute force over all centers.
std::vector<GroupedObject> group(std::span<const CenterDet> centers,
                                 std::span<const MidpointDet> midpoints,
                                 const GroupThresholds& thresholds);

struct Detection {
  OrientedBox box;  // canonical; carries the class id
  double score = 0.0;
};

enum class BoxBuilder {
  kRefined,  // center refinement, orientation solve, midpoint refinement
  kSimple,   // parallelogram from raw midpoints, no angle solve
};

/// Box for one grouped object. Throws midbox::Error when the keypoints are
/// geometrically degenerate.
Detection build_detection(const GroupedObject& object, BoxBuilder builder = BoxBuilder::kRefined);

struct DecodeResult {
  std::vector<Detection> detections;  // score descending, stable
  std::size_t dropped = 0;            // groups whose box construction failed
};

DecodeResult decode(std::span<const CenterDet> centers, std::span<const MidpointDet> midpoints,
                    const GroupThresholds& thresholds,
                    BoxBuilder builder = BoxBuilder::kRefined);

}  // namespace midbox
