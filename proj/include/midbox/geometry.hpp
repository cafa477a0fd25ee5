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

// Oriented-box representation, five-keypoint midpoint encoding and the
// analytic decode steps that turn noisy keypoints back into a rectangle.
//
// Coordinates are image pixels: x grows rightward, y grows downward. An
// angle theta denotes the direction u(theta) = (cos theta, sin theta); a box
// extends w along u(theta) and h along u(theta + pi/2).

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>

namespace midbox {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend constexpr Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Reduces an angle to [0, pi). Axes are undirected, so this is the natural
/// range for the symmetric-axis orientation.
double wrap_angle_pi(double theta);

struct OrientedBox {
  Point2 center;
  double w = 0.0;      // extent along theta
  double h = 0.0;      // extent along theta + pi/2
  double theta = 0.0;  // radians
  int class_id = 0;
};

/// Returns the same rectangle with theta in [0, pi/2). When the input angle
/// (mod pi) lies in [pi/2, pi) the extents are swapped. Throws kInvalidBox on
/// non-finite values or non-positive extents.
OrientedBox canonicalize(const OrientedBox& box);

/// Corners c +- (w/2)u +- (h/2)u_perp, counter-clockwise in math orientation
/// (clockwise on screen).
std::array<Point2, 4> box_corners(const OrientedBox& box);

/// Smallest rotation taking one box's axis pair onto the other's, in
/// [0, pi/4]. Meaningful when both boxes denote (nearly) the same rectangle.
double axis_angle_error(const OrientedBox& a, const OrientedBox& b);

// ---------------------------------------------------------------------------
// Midpoint encoding
// ---------------------------------------------------------------------------

/// Edge midpoint labels, clockwise on screen starting at the left one.
enum class MidLabel : int { kLeft = 0, kTop = 1, kRight = 2, kBottom = 3 };

inline constexpr std::array<MidLabel, 4> kMidLabels = {MidLabel::kLeft, MidLabel::kTop,
                                                       MidLabel::kRight, MidLabel::kBottom};

constexpr std::size_t index_of(MidLabel label) { return static_cast<std::size_t>(label); }
const char* label_name(MidLabel label) noexcept;
/// Parses "l", "t", "r", "b"; throws kParse otherwise.
MidLabel label_from_name(std::string_view name);

/// Quadrant of an offset (dx, dy) from the center, y-down. Open quadrants are
/// top-left -> l, top-right -> t, bottom-right -> r, bottom-left -> b; points
/// directly left/up/right/down go to l/t/r/b respectively. Throws
/// kDegenerateGeometry for the zero offset.
MidLabel quadrant_label(Point2 offset);

/// Per-midpoint shift magnitudes (|dx|, |dy|) towards the center.
struct CentripetalShift {
  double x = 0.0;
  double y = 0.0;
};

struct SignPair {
  int x = 1;
  int y = 1;
};

/// Fixed sign pair that maps a labelled midpoint onto its center:
/// center = p + (sx * shift.x, sy * shift.y).
constexpr SignPair shift_signs(MidLabel label) {
  switch (label) {
    case MidLabel::kLeft: return {+1, +1};
    case MidLabel::kTop: return {-1, +1};
    case MidLabel::kRight: return {-1, -1};
    case MidLabel::kBottom: return {+1, -1};
  }
  return {};
}

constexpr Point2 apply_shift(Point2 pos, MidLabel label, CentripetalShift shift) {
  const SignPair s = shift_signs(label);
  return {pos.x + s.x * shift.x, pos.y + s.y * shift.y};
}

struct KeypointSet {
  std::array<Point2, 4> midpoints;  // indexed by MidLabel
  Point2 center;
  std::array<double, 4> midpoint_scores{1.0, 1.0, 1.0, 1.0};
  double center_score = 1.0;
  std::array<CentripetalShift, 4> shifts;
  double radius = 0.0;

  Point2 midpoint(MidLabel label) const { return midpoints[index_of(label)]; }
  CentripetalShift shift(MidLabel label) const { return shifts[index_of(label)]; }
};

/// Ground-truth encoding of a box: the four edge midpoints labelled by
/// quadrant, their centripetal shifts, and the matching radius (distance from
/// the center to the nearest midpoint). All scores are 1.
KeypointSet box_to_keypoints(const OrientedBox& box);

// ---------------------------------------------------------------------------
// Analytic decode
// ---------------------------------------------------------------------------

struct ScoredPoint {
  Point2 pos;
  double score = 1.0;
};

using MidpointQuad = std::array<Point2, 4>;          // indexed by MidLabel
using ScoredMidpoints = std::array<ScoredPoint, 4>;  // indexed by MidLabel

/// Confidence-weighted mean of the four shifted midpoint positions and the
/// raw center. Weights are normalised to sum to one. Throws
/// kDegenerateWeights when every score is zero, kInvalidBox on negative or
/// non-finite scores.
Point2 refine_center(const ScoredMidpoints& shifted_midpoints, const ScoredPoint& center);

/// Summed unsigned distances of l, r to the axis through `center` along
/// theta, and of t, b to the perpendicular axis. Period pi in theta.
double orientation_objective(double theta, Point2 center, const MidpointQuad& midpoints);

inline constexpr int kOrientationGridSamples = 1024;
inline constexpr double kOrientationTolerance = 1e-8;

/// Angle in [0, pi) minimising orientation_objective. A uniform grid locates
/// the basin, golden-section search refines it, and the per-midpoint axis
/// alignments are compared as final candidates. Throws kDegenerateGeometry
/// when every midpoint coincides with the center.
double solve_orientation(Point2 center, const MidpointQuad& midpoints);

struct ScoredBox {
  OrientedBox box;
  double score = 0.0;
};

/// Projects l, r onto the theta axis and t, b onto the perpendicular axis,
/// takes score-weighted means of the |distances| to the center as the two
/// half-extents, and builds a canonical box. The score is the mean of the
/// five keypoint confidences.
ScoredBox refine_and_build(Point2 center, double theta, const ScoredMidpoints& midpoints,
                           double center_score, int class_id);

/// Corners of the parallelogram bounded by the l-r line translated through t
/// and b, and the t-b line translated through l and r. Order: (t,l), (t,r),
/// (b,r), (b,l). Throws kDegenerateGeometry when a pair coincides or the two
/// connecting lines are parallel.
std::array<Point2, 4> midpoint_parallelogram(const MidpointQuad& midpoints);

/// Minimum-area rotated rectangle enclosing `points` (rotating calipers over
/// the convex hull edges), canonicalised. Needs at least three non-collinear
/// points.
OrientedBox min_area_rect(std::span<const Point2> points, int class_id = 0);

/// Box construction without angle solving: the rectangle enclosing
/// midpoint_parallelogram with minimum area.
OrientedBox build_box_simple(const MidpointQuad& midpoints, int class_id);

}  // namespace midbox
