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

#include "midbox/geometry.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "midbox/error.hpp"
#include "midbox/golden.hpp"

namespace midbox {

namespace {

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Point2 perpendicular(Point2 u) { return {-u.y, u.x}; }

void check_scores(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) {
      throw Error(ErrorKind::kInvalidBox, "keypoint scores must be finite and non-negative");
    }
  }
}

// Zero of the per-midpoint term: the axis angle that makes the midpoint lie
// exactly on its own symmetric axis.
double alignment_angle(Point2 offset, MidLabel label) {
  double phi = std::atan2(offset.y, offset.x);
  if (label == MidLabel::kTop || label == MidLabel::kBottom) phi -= kHalfPi;
  return wrap_angle_pi(phi);
}

}  // namespace

double wrap_angle_pi(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t -= kPi;
  return t;
}

OrientedBox canonicalize(const OrientedBox& box) {
  if (!finite(box.center) || !std::isfinite(box.theta) || !std::isfinite(box.w) ||
      !std::isfinite(box.h)) {
    throw Error(ErrorKind::kInvalidBox, "box has non-finite fields");
  }
  if (box.w <= 0.0 || box.h <= 0.0) {
    throw Error(ErrorKind::kInvalidBox, "box extents must be positive");
  }
  OrientedBox out = box;
  double t = wrap_angle_pi(box.theta);
  if (t >= kHalfPi) {
    std::swap(out.w, out.h);
    t -= kHalfPi;
  }
  out.theta = t;
  return out;
}

std::array<Point2, 4> box_corners(const OrientedBox& box) {
  const Point2 u = direction(box.theta);
  const Point2 a = (box.w / 2.0) * u;
  const Point2 b = (box.h / 2.0) * perpendicular(u);
  const Point2 c = box.center;
  return {c + a + b, c - a + b, c - a - b, c + a - b};
}

double axis_angle_error(const OrientedBox& a, const OrientedBox& b) {
  const double d = std::fmod(std::abs(a.theta - b.theta), kHalfPi);
  return std::min(d, kHalfPi - d);
}

const char* label_name(MidLabel label) noexcept {
  switch (label) {
    case MidLabel::kLeft: return "l";
    case MidLabel::kTop: return "t";
    case MidLabel::kRight: return "r";
    case MidLabel::kBottom: return "b";
  }
  return "?";
}

MidLabel label_from_name(std::string_view name) {
  if (name == "l") return MidLabel::kLeft;
  if (name == "t") return MidLabel::kTop;
  if (name == "r") return MidLabel::kRight;
  if (name == "b") return MidLabel::kBottom;
  throw Error(ErrorKind::kParse, "unknown midpoint label '" + std::string(name) + "'");
}

MidLabel quadrant_label(Point2 d) {
  if (d.x < 0.0 && d.y <= 0.0) return MidLabel::kLeft;
  if (d.x >= 0.0 && d.y < 0.0) return MidLabel::kTop;
  if (d.x > 0.0 && d.y >= 0.0) return MidLabel::kRight;
  if (d.x <= 0.0 && d.y > 0.0) return MidLabel::kBottom;
  throw Error(ErrorKind::kDegenerateGeometry, "offset coincides with the center");
}

KeypointSet box_to_keypoints(const OrientedBox& box) {
  const OrientedBox b = canonicalize(box);
  const Point2 u = direction(b.theta);
  const Point2 along = (b.w / 2.0) * u;
  const Point2 across = (b.h / 2.0) * perpendicular(u);
  const std::array<Point2, 4> offsets = {along, -1.0 * along, across, -1.0 * across};

  KeypointSet kp;
  kp.center = b.center;
  std::array<bool, 4> taken{};
  for (const Point2& d : offsets) {
    const std::size_t i = index_of(quadrant_label(d));
    if (taken[i]) {
      throw Error(ErrorKind::kDegenerateGeometry, "midpoints collapse onto one quadrant");
    }
    taken[i] = true;
    kp.midpoints[i] = b.center + d;
  }

  kp.radius = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 rel = kp.midpoints[i] - kp.center;
    kp.shifts[i] = {std::abs(rel.x), std::abs(rel.y)};
    kp.radius = std::min(kp.radius, norm(rel));
  }
  return kp;
}

Point2 refine_center(const ScoredMidpoints& shifted_midpoints, const ScoredPoint& center) {
  std::array<double, 5> scores{};
  for (std::size_t i = 0; i < 4; ++i) scores[i] = shifted_midpoints[i].score;
  scores[4] = center.score;
  check_scores(scores);

  double total = 0.0;
  for (double s : scores) total += s;
  if (!(total > 0.0)) {
    throw Error(ErrorKind::kDegenerateWeights, "all keypoint scores are zero");
  }

  Point2 acc{0.0, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    acc = acc + (shifted_midpoints[i].score / total) * shifted_midpoints[i].pos;
  }
  acc = acc + (center.score / total) * center.pos;
  return acc;
}

double orientation_objective(double theta, Point2 center, const MidpointQuad& midpoints) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  double sum = 0.0;
  for (MidLabel label : kMidLabels) {
    const Point2 d = midpoints[index_of(label)] - center;
    if (label == MidLabel::kLeft || label == MidLabel::kRight) {
      sum += std::abs(c * d.y - s * d.x);  // |u x d|
    } else {
      sum += std::abs(c * d.x + s * d.y);  // |u . d|, distance to the perpendicular axis
    }
  }
  return sum;
}

double solve_orientation(Point2 center, const MidpointQuad& midpoints) {
  bool any = false;
  for (const Point2& m : midpoints) {
    if (!finite(m)) throw Error(ErrorKind::kDegenerateGeometry, "non-finite midpoint");
    any = any || !(m == center);
  }
  if (!finite(center)) throw Error(ErrorKind::kDegenerateGeometry, "non-finite center");
  if (!any) throw Error(ErrorKind::kDegenerateGeometry, "all midpoints coincide with the center");

  auto objective = [&](double t) { return orientation_objective(t, center, midpoints); };

  const double step = kPi / kOrientationGridSamples;
  int best_index = 0;
  double best_value = objective(0.0);
  for (int i = 1; i < kOrientationGridSamples; ++i) {
    const double v = objective(i * step);
    if (v < best_value) {
      best_value = v;
      best_index = i;
    }
  }

  double theta = best_index * step;
  const double refined = golden_section_minimize(objective, theta - step, theta + step,
                                                 kOrientationTolerance);
  if (const double v = objective(refined); v < best_value) {
    best_value = v;
    theta = refined;
  }

  // Every term is |sin| of a shifted angle, so the objective is concave
  // between consecutive axis alignments and its minimum sits on one of them.
  for (MidLabel label : kMidLabels) {
    const Point2 d = midpoints[index_of(label)] - center;
    if (d.x == 0.0 && d.y == 0.0) continue;
    const double candidate = alignment_angle(d, label);
    if (const double v = objective(candidate); v < best_value) {
      best_value = v;
      theta = candidate;
    }
  }
  return wrap_angle_pi(theta);
}

ScoredBox refine_and_build(Point2 center, double theta, const ScoredMidpoints& midpoints,
                           double center_score, int class_id) {
  std::array<double, 5> scores{};
  for (std::size_t i = 0; i < 4; ++i) scores[i] = midpoints[i].score;
  scores[4] = center_score;
  check_scores(scores);

  const Point2 u = direction(theta);
  const Point2 v = perpendicular(u);

  auto pair_extent = [&](MidLabel a, MidLabel b, Point2 axis) {
    const ScoredPoint& pa = midpoints[index_of(a)];
    const ScoredPoint& pb = midpoints[index_of(b)];
    const double weight = pa.score + pb.score;
    if (!(weight > 0.0)) {
      throw Error(ErrorKind::kDegenerateWeights,
                  std::string("zero score sum for pair ") + label_name(a) + label_name(b));
    }
    const double da = std::abs(dot(pa.pos - center, axis));
    const double db = std::abs(dot(pb.pos - center, axis));
    return (pa.score * da + pb.score * db) / weight;
  };

  const double half_w = pair_extent(MidLabel::kLeft, MidLabel::kRight, u);
  const double half_h = pair_extent(MidLabel::kTop, MidLabel::kBottom, v);
  if (!(half_w > 0.0) || !(half_h > 0.0) || !std::isfinite(half_w) || !std::isfinite(half_h)) {
    throw Error(ErrorKind::kDegenerateBox, "refined box has a zero extent");
  }

  ScoredBox out;
  out.box = canonicalize({center, 2.0 * half_w, 2.0 * half_h, theta, class_id});
  double sum = 0.0;
  for (double s : scores) sum += s;
  out.score = sum / 5.0;
  return out;
}

std::array<Point2, 4> midpoint_parallelogram(const MidpointQuad& m) {
  const Point2 pl = m[index_of(MidLabel::kLeft)];
  const Point2 pt = m[index_of(MidLabel::kTop)];
  const Point2 pr = m[index_of(MidLabel::kRight)];
  const Point2 pb = m[index_of(MidLabel::kBottom)];
  const Point2 a = pr - pl;
  const Point2 b = pb - pt;
  const double denom = cross(a, b);
  if (norm(a) == 0.0 || norm(b) == 0.0 || std::abs(denom) <= 1e-12 * norm(a) * norm(b)) {
    throw Error(ErrorKind::kDegenerateGeometry, "midpoint axes are parallel or degenerate");
  }
  // Line p + s*a meets line q + t*b at s = cross(q - p, b) / cross(a, b).
  auto meet = [&](Point2 p, Point2 q) { return p + (cross(q - p, b) / denom) * a; };
  return {meet(pt, pl), meet(pt, pr), meet(pb, pr), meet(pb, pl)};
}

OrientedBox min_area_rect(std::span<const Point2> points, int class_id) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    throw Error(ErrorKind::kDegenerateGeometry, "need three distinct points for a rectangle");
  }

  // Andrew's monotone chain, counter-clockwise.
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    throw Error(ErrorKind::kDegenerateGeometry, "points are collinear");
  }

  double best_area = std::numeric_limits<double>::infinity();
  OrientedBox best;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2 edge = hull[(i + 1) % hull.size()] - hull[i];
    const double len = norm(edge);
    if (len == 0.0) continue;
    const Point2 e = (1.0 / len) * edge;
    const Point2 n = perpendicular(e);
    double lo_e = std::numeric_limits<double>::infinity(), hi_e = -lo_e;
    double lo_n = lo_e, hi_n = -lo_e;
    for (const Point2& p : hull) {
      lo_e = std::min(lo_e, dot(p, e));
      hi_e = std::max(hi_e, dot(p, e));
      lo_n = std::min(lo_n, dot(p, n));
      hi_n = std::max(hi_n, dot(p, n));
    }
    const double area = (hi_e - lo_e) * (hi_n - lo_n);
    if (area < best_area) {
      best_area = area;
      best.center = ((lo_e + hi_e) / 2.0) * e + ((lo_n + hi_n) / 2.0) * n;
      best.w = hi_e - lo_e;
      best.h = hi_n - lo_n;
      best.theta = std::atan2(e.y, e.x);
    }
  }
  best.class_id = class_id;
  return canonicalize(best);
}

OrientedBox build_box_simple(const MidpointQuad& midpoints, int class_id) {
  const std::array<Point2, 4> corners = midpoint_parallelogram(midpoints);
  return min_area_rect(corners, class_id);
}

}  // namespace midbox
