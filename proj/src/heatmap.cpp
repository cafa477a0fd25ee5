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

#include "midbox/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace midbox {

namespace {

Shape3 grid_shape(std::size_t channels, ImageSize image, int stride) {
  const auto cells = [stride](int extent) {
    return static_cast<std::size_t>((extent + stride - 1) / stride);
  };
  return {channels, cells(image.height), cells(image.width)};
}

GridPoint clamp_to_grid(GridPoint p, const Shape3& shape, bool* clamped) {
  const int max_x = static_cast<int>(shape.width) - 1;
  const int max_y = static_cast<int>(shape.height) - 1;
  const GridPoint q{std::clamp(p.x, 0, max_x), std::clamp(p.y, 0, max_y)};
  *clamped = q.x != p.x || q.y != p.y;
  return q;
}

GridPoint cell_of(Point2 p, int stride) {
  return {static_cast<int>(std::floor(p.x / stride)), static_cast<int>(std::floor(p.y / stride))};
}

std::string describe(GridPoint p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

}  // namespace

void TargetSet::validate() const {
  const std::size_t k = center_heat.channels();
  const std::size_t h = center_heat.height();
  const std::size_t w = center_heat.width();
  auto expect = [&](const Tensor& t, std::size_t channels, const char* name) {
    if (!(t.shape() == Shape3{channels, h, w})) {
      throw Error(ErrorKind::kShapeMismatch, std::string(name) + " does not match the grid");
    }
  };
  if (k == 0) throw Error(ErrorKind::kShapeMismatch, "center heatmap has no class channels");
  expect(mid_heat, 4 * k, "midpoint heatmap");
  expect(shift_map, 8, "shift map");
  expect(radius_map, 1, "radius map");
  expect(pos_mask, 5, "position mask");
}

bool render_gaussian(Tensor& heat, std::size_t channel, GridPoint center, double sigma,
                     Diagnostics* diag) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::kInvalidArgument, "gaussian sigma must be positive");
  if (channel >= heat.channels()) {
    throw Error(ErrorKind::kShapeMismatch, "gaussian channel out of range");
  }
  if (heat.height() == 0 || heat.width() == 0) return false;

  bool clamped = false;
  const GridPoint c = clamp_to_grid(center, heat.shape(), &clamped);
  if (clamped) warn(diag, "gaussian center " + describe(center) + " clamped to " + describe(c));

  const int reach = static_cast<int>(std::floor(3.0 * sigma));
  const double limit = 9.0 * sigma * sigma;
  const int y0 = std::max(0, c.y - reach);
  const int y1 = std::min(static_cast<int>(heat.height()) - 1, c.y + reach);
  const int x0 = std::max(0, c.x - reach);
  const int x1 = std::min(static_cast<int>(heat.width()) - 1, c.x + reach);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d2 = double(x - c.x) * (x - c.x) + double(y - c.y) * (y - c.y);
      if (d2 > limit) continue;
      float& v = heat.at(channel, y, x);
      v = std::max(v, static_cast<float>(std::exp(-d2 / (2.0 * sigma * sigma))));
    }
  }
  return clamped;
}

double gaussian_sigma(double radius, int stride) {
  return std::max(1.0, radius / (3.0 * stride));
}

TargetSet encode_targets(std::span<const OrientedBox> annotations, ImageSize image, int stride,
                         int num_classes, Diagnostics* diag) {
  if (stride < 1) throw Error(ErrorKind::kInvalidArgument, "stride must be >= 1");
  if (num_classes < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one class");
  if (image.width <= 0 || image.height <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "image size must be positive");
  }

  const auto k = static_cast<std::size_t>(num_classes);
  TargetSet t;
  t.center_heat = Tensor(grid_shape(k, image, stride));
  t.mid_heat = Tensor(grid_shape(4 * k, image, stride));
  t.shift_map = Tensor(grid_shape(8, image, stride));
  t.radius_map = Tensor(grid_shape(1, image, stride));
  t.pos_mask = Tensor(grid_shape(5, image, stride));
  const Shape3& grid = t.center_heat.shape();

  for (std::size_t n = 0; n < annotations.size(); ++n) {
    const OrientedBox& box = annotations[n];
    if (box.class_id < 0 || box.class_id >= num_classes) {
      warn(diag, "box " + std::to_string(n) + ": class " + std::to_string(box.class_id) +
                     " outside [0," + std::to_string(num_classes) + "), skipped");
      continue;
    }
    KeypointSet kp;
    try {
      kp = box_to_keypoints(box);
    } catch (const Error& e) {
      warn(diag, "box " + std::to_string(n) + " skipped: " + e.message());
      continue;
    }

    const double sigma = gaussian_sigma(kp.radius, stride);
    const auto cls = static_cast<std::size_t>(box.class_id);
    auto place = [&](Point2 p) {
      bool clamped = false;
      const GridPoint cell = clamp_to_grid(cell_of(p, stride), grid, &clamped);
      if (clamped) warn(diag, "box " + std::to_string(n) + ": keypoint outside the grid, clamped");
      return cell;
    };

    const GridPoint cc = place(kp.center);
    render_gaussian(t.center_heat, cls, cc, sigma);
    t.radius_map.at(0, cc.y, cc.x) = static_cast<float>(kp.radius / stride);
    t.pos_mask.at(4, cc.y, cc.x) = 1.0f;

    for (MidLabel label : kMidLabels) {
      const std::size_t i = index_of(label);
      const GridPoint mc = place(kp.midpoints[i]);
      render_gaussian(t.mid_heat, 4 * cls + i, mc, sigma);
      t.shift_map.at(2 * i, mc.y, mc.x) = static_cast<float>(kp.shifts[i].x / stride);
      t.shift_map.at(2 * i + 1, mc.y, mc.x) = static_cast<float>(kp.shifts[i].y / stride);
      t.pos_mask.at(i, mc.y, mc.x) = 1.0f;
    }
  }
  return t;
}

std::vector<Peak> extract_peaks(const Tensor& heat, std::size_t topk, double thresh) {
  if (topk < 1) throw Error(ErrorKind::kInvalidArgument, "topk must be >= 1");
  const int h = static_cast<int>(heat.height());
  const int w = static_cast<int>(heat.width());

  auto ranked = [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.channel != b.channel) return a.channel < b.channel;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  };

  std::vector<Peak> all;
  for (std::size_t c = 0; c < heat.channels(); ++c) {
    std::vector<Peak> peaks;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float v = heat.at(c, y, x);
        if (!(v > 0.0f) || v < thresh) continue;
        bool is_peak = true;
        for (int dy = -1; dy <= 1 && is_peak; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if ((dx == 0 && dy == 0) || ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (heat.at(c, ny, nx) > v) {
              is_peak = false;
              break;
            }
          }
        }
        if (is_peak) peaks.push_back({c, x, y, v});
      }
    }
    std::sort(peaks.begin(), peaks.end(), ranked);
    if (peaks.size() > topk) peaks.resize(topk);
    all.insert(all.end(), peaks.begin(), peaks.end());
  }
  std::sort(all.begin(), all.end(), ranked);
  return all;
}

KeypointDetections decode_maps(const TargetSet& pred, int stride, std::size_t topk,
                               const GroupThresholds& thresholds) {
  pred.validate();
  if (stride < 1) throw Error(ErrorKind::kInvalidArgument, "stride must be >= 1");
  const double s = stride;
  auto cell_center = [s](const Peak& p) { return Point2{(p.x + 0.5) * s, (p.y + 0.5) * s}; };

  KeypointDetections out;
  for (const Peak& p : extract_peaks(pred.center_heat, topk, thresholds.center)) {
    CenterDet det;
    det.pos = cell_center(p);
    det.score = p.score;
    det.radius = std::max(1.0, double(pred.radius_map.at(0, p.y, p.x)) * s);
    det.class_id = static_cast<int>(p.channel);
    out.centers.push_back(det);
  }
  for (const Peak& p : extract_peaks(pred.mid_heat, topk, thresholds.midpoint)) {
    const std::size_t i = p.channel % 4;
    MidpointDet det;
    det.label = kMidLabels[i];
    det.pos = cell_center(p);
    det.score = p.score;
    det.shift = {std::max(0.0, double(pred.shift_map.at(2 * i, p.y, p.x)) * s),
                 std::max(0.0, double(pred.shift_map.at(2 * i + 1, p.y, p.x)) * s)};
    det.class_id = static_cast<int>(p.channel / 4);
    out.midpoints.push_back(det);
  }
  return out;
}

double focal_loss(const Tensor& pred, const Tensor& target, const LossWeights& weights) {
  require_same_shape(pred, target, "focal loss");
  constexpr double kEps = 1e-6;
  double pos_sum = 0.0;
  double neg_sum = 0.0;
  std::size_t num_pos = 0;
  const auto p_data = pred.data();
  const auto t_data = target.data();
  for (std::size_t i = 0; i < p_data.size(); ++i) {
    const double p = std::clamp(double(p_data[i]), kEps, 1.0 - kEps);
    const double t = t_data[i];
    if (t == 1.0) {
      ++num_pos;
      pos_sum += std::pow(1.0 - p, weights.focal_a) * std::log(p);
    } else {
      neg_sum += std::pow(1.0 - t, weights.focal_b) * std::pow(p, weights.focal_a) *
                 std::log(1.0 - p);
    }
  }
  return -(pos_sum + neg_sum) / double(std::max<std::size_t>(1, num_pos));
}

double l1_masked(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  require_same_shape(pred, target, "l1 loss");
  require_same_shape(pred, mask, "l1 loss mask");
  double num = 0.0;
  double den = 0.0;
  const auto p = pred.data();
  const auto t = target.data();
  const auto m = mask.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += double(m[i]) * std::abs(double(p[i]) - double(t[i]));
    den += m[i];
  }
  return num / std::max(1.0, den);
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  for (double v : {parts.midpoint, parts.center, parts.shift, parts.radius}) {
    if (!(v >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "loss parts must be non-negative");
  }
  return parts.midpoint + weights.alpha * parts.center + parts.shift + weights.beta * parts.radius;
}

Tensor shift_mask(const Tensor& pos_mask) {
  if (pos_mask.channels() != 5) {
    throw Error(ErrorKind::kShapeMismatch, "position mask must have 5 channels");
  }
  Tensor out({8, pos_mask.height(), pos_mask.width()});
  for (std::size_t i = 0; i < 4; ++i) {
    const auto src = pos_mask.channel(i);
    std::copy(src.begin(), src.end(), out.channel(2 * i).begin());
    std::copy(src.begin(), src.end(), out.channel(2 * i + 1).begin());
  }
  return out;
}

LossParts compute_loss_parts(const TargetSet& pred, const TargetSet& target,
                             const LossWeights& weights) {
  pred.validate();
  target.validate();
  Tensor radius_mask({1, target.pos_mask.height(), target.pos_mask.width()});
  const auto centers = target.pos_mask.channel(4);
  std::copy(centers.begin(), centers.end(), radius_mask.channel(0).begin());

  LossParts parts;
  parts.midpoint = focal_loss(pred.mid_heat, target.mid_heat, weights);
  parts.center = focal_loss(pred.center_heat, target.center_heat, weights);
  parts.shift = l1_masked(pred.shift_map, target.shift_map, shift_mask(target.pos_mask));
  parts.radius = l1_masked(pred.radius_map, target.radius_map, radius_mask);
  return parts;
}

}  // namespace midbox
