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

#include "midbox/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "midbox/error.hpp"

namespace midbox {

namespace {

constexpr double kAreaFloor = 1e-12;

double signed_area(const Polygon& poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    acc += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return acc / 2.0;
}

}  // namespace

Polygon box_to_polygon(const OrientedBox& box) {
  const auto corners = box_corners(box);
  return Polygon(corners.begin(), corners.end());
}

double polygon_area(const Polygon& poly) {
  return poly.size() < 3 ? 0.0 : std::abs(signed_area(poly));
}

Polygon convex_clip(const Polygon& subject, const Polygon& clipper) {
  if (subject.size() < 3 || clipper.size() < 3) return {};
  Polygon out = subject;
  for (std::size_t e = 0; e < clipper.size() && !out.empty(); ++e) {
    const Point2 a = clipper[e];
    const Point2 b = clipper[(e + 1) % clipper.size()];
    const Point2 edge = b - a;
    auto side = [&](Point2 p) { return cross(edge, p - a); };  // >= 0 inside

    Polygon next;
    next.reserve(out.size() + 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Point2 p = out[i];
      const Point2 q = out[(i + 1) % out.size()];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) next.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        next.push_back(p + t * (q - p));
      }
    }
    out = std::move(next);
  }
  if (out.size() < 3 || polygon_area(out) < kAreaFloor) return {};
  return out;
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
  const Polygon pa = box_to_polygon(a);
  const Polygon pb = box_to_polygon(b);
  const double inter = polygon_area(convex_clip(pa, pb));
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<MatchedDetection> match_detections(std::span<const DetectionRecord> dets,
                                               std::span<const GroundTruth> gts, double iou_thr) {
  if (!(iou_thr > 0.0 && iou_thr <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "IoU threshold must lie in (0, 1]");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> taken(gts.size(), false);
  std::vector<MatchedDetection> out;
  out.reserve(dets.size());
  for (std::size_t d : order) {
    const DetectionRecord& det = dets[d];
    MatchedDetection m;
    m.detection = d;
    double best = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const GroundTruth& gt = gts[g];
      if (gt.image_id != det.image_id || gt.box.class_id != det.box.class_id) continue;
      if (taken[g] && !gt.difficult) continue;
      const double iou = rotated_iou(det.box, gt.box);
      if (iou > best) {
        best = iou;
        m.ground_truth = g;
      }
    }
    m.iou = std::max(best, 0.0);
    if (m.ground_truth && best >= iou_thr) {
      if (gts[*m.ground_truth].difficult) {
        m.outcome = MatchOutcome::kIgnored;
      } else {
        m.outcome = MatchOutcome::kTruePositive;
        taken[*m.ground_truth] = true;
      }
    } else {
      m.outcome = MatchOutcome::kFalsePositive;
      m.ground_truth.reset();
    }
    out.push_back(m);
  }
  return out;
}

double ap_voc07(std::span<const MatchOutcome> ordered, std::size_t num_gt) {
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (MatchOutcome o : ordered) {
    if (o == MatchOutcome::kIgnored) continue;
    (o == MatchOutcome::kTruePositive ? tp : fp) += 1;
    if (num_gt == 0) continue;
    precision.push_back(double(tp) / double(tp + fp));
    recall.push_back(double(tp) / double(num_gt));
  }
  if (num_gt == 0) {
    if (tp > 0) throw Error(ErrorKind::kInvalidArgument, "true positives without ground truth");
    return 0.0;
  }

  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double level = i / 10.0;
    double best = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= level) best = std::max(best, precision[k]);
    }
    sum += best;
  }
  return sum / 11.0;
}

double mean_ap(std::span<const double> per_class_ap) {
  if (per_class_ap.empty()) return 0.0;
  return std::accumulate(per_class_ap.begin(), per_class_ap.end(), 0.0) /
         double(per_class_ap.size());
}

EvalReport evaluate_voc07(std::span<const DetectionRecord> dets, std::span<const GroundTruth> gts,
                          double iou_thr) {
  std::map<int, ClassReport> by_class;
  for (const GroundTruth& gt : gts) {
    ClassReport& r = by_class[gt.box.class_id];
    r.class_id = gt.box.class_id;
    if (!gt.difficult) ++r.num_gt;
  }

  std::map<int, std::vector<MatchOutcome>> outcomes;
  for (const MatchedDetection& m : match_detections(dets, gts, iou_thr)) {
    const int cls = dets[m.detection].box.class_id;
    outcomes[cls].push_back(m.outcome);
  }

  EvalReport report;
  std::vector<double> aps;
  for (auto& [cls, r] : by_class) {
    const auto& seq = outcomes[cls];
    r.true_positives = std::count(seq.begin(), seq.end(), MatchOutcome::kTruePositive);
    r.false_positives = std::count(seq.begin(), seq.end(), MatchOutcome::kFalsePositive);
    r.ap = ap_voc07(seq, r.num_gt);
    aps.push_back(r.ap);
    report.classes.push_back(r);
  }
  report.map = mean_ap(aps);
  return report;
}

}  // namespace midbox
