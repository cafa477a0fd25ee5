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

#include "midbox/matcher.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>

#include "midbox/error.hpp"

namespace midbox {

namespace {

struct Claim {
  std::size_t midpoint = 0;
  double distance = 0.0;
};

bool better_claim(const Claim& candidate, const Claim& incumbent,
                  std::span<const MidpointDet> midpoints) {
  const double sc = midpoints[candidate.midpoint].score;
  const double si = midpoints[incumbent.midpoint].score;
  if (sc != si) return sc > si;
  if (candidate.distance != incumbent.distance) return candidate.distance < incumbent.distance;
  return candidate.midpoint < incumbent.midpoint;
}

}  // namespace

std::vector<GroupedObject> group(std::span<const CenterDet> centers,
                                 std::span<const MidpointDet> midpoints,
                                 const GroupThresholds& thresholds) {
  std::vector<std::size_t> live_centers;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i].score >= thresholds.center) live_centers.push_back(i);
  }

  std::vector<std::array<std::optional<Claim>, 4>> slots(centers.size());
  for (std::size_t m = 0; m < midpoints.size(); ++m) {
    const MidpointDet& det = midpoints[m];
    if (det.score < thresholds.midpoint) continue;
    const Point2 target = shifted_position(det);

    std::optional<std::size_t> nearest;
    double nearest_distance = std::numeric_limits<double>::infinity();
    for (std::size_t c : live_centers) {
      if (centers[c].class_id != det.class_id) continue;
      const double d = distance(target, centers[c].pos);
      if (d < nearest_distance) {
        nearest_distance = d;
        nearest = c;
      }
    }
    if (!nearest || nearest_distance > centers[*nearest].radius) continue;

    auto& slot = slots[*nearest][index_of(det.label)];
    const Claim claim{m, nearest_distance};
    if (!slot || better_claim(claim, *slot, midpoints)) slot = claim;
  }

  std::vector<GroupedObject> out;
  for (std::size_t c : live_centers) {
    const auto& slot = slots[c];
    if (!std::all_of(slot.begin(), slot.end(), [](const auto& s) { return s.has_value(); })) {
      continue;
    }
    GroupedObject obj;
    obj.center = centers[c];
    obj.center_index = c;
    for (std::size_t i = 0; i < 4; ++i) {
      obj.chosen[i] = midpoints[slot[i]->midpoint];
      obj.midpoint_index[i] = slot[i]->midpoint;
    }
    out.push_back(obj);
  }
  std::stable_sort(out.begin(), out.end(), [](const GroupedObject& a, const GroupedObject& b) {
    return a.center.score > b.center.score;
  });
  return out;
}

Detection build_detection(const GroupedObject& object, BoxBuilder builder) {
  const int class_id = object.center.class_id;
  double score_sum = object.center.score;
  MidpointQuad raw;
  ScoredMidpoints raw_scored;
  ScoredMidpoints shifted;
  for (std::size_t i = 0; i < 4; ++i) {
    const MidpointDet& m = object.chosen[i];
    raw[i] = m.pos;
    raw_scored[i] = {m.pos, m.score};
    shifted[i] = {shifted_position(m), m.score};
    score_sum += m.score;
  }

  if (builder == BoxBuilder::kSimple) {
    return {build_box_simple(raw, class_id), score_sum / 5.0};
  }

  const Point2 center = refine_center(shifted, {object.center.pos, object.center.score});
  const double theta = solve_orientation(center, raw);
  const ScoredBox built = refine_and_build(center, theta, raw_scored, object.center.score,
                                           class_id);
  return {built.box, built.score};
}

DecodeResult decode(std::span<const CenterDet> centers, std::span<const MidpointDet> midpoints,
                    const GroupThresholds& thresholds, BoxBuilder builder) {
  DecodeResult result;
  for (const GroupedObject& obj : group(centers, midpoints, thresholds)) {
    try {
      result.detections.push_back(build_detection(obj, builder));
    } catch (const Error&) {
      ++result.dropped;
    }
  }
  std::stable_sort(result.detections.begin(), result.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return result;
}

}  // namespace midbox
