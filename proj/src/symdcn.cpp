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

#include "midbox/symdcn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "midbox/error.hpp"

namespace midbox {

namespace {

struct Cell {
  long x0 = 0;
  long y0 = 0;
  double lx = 0.0;  // fractional position inside the cell
  double ly = 0.0;
};

Cell floor_cell(double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  return {static_cast<long>(fx), static_cast<long>(fy), x - fx, y - fy};
}

// Same interpolant, but integer coordinates resolve to the cell on their
// left/top so the offset derivative there is the left one-sided slope.
Cell left_cell(double x, double y) {
  const double fx = std::ceil(x) - 1.0;
  const double fy = std::ceil(y) - 1.0;
  return {static_cast<long>(fx), static_cast<long>(fy), x - fx, y - fy};
}

double pixel(const Tensor& map, std::size_t c, long x, long y) {
  if (x < 0 || y < 0 || x >= static_cast<long>(map.width()) ||
      y >= static_cast<long>(map.height())) {
    return 0.0;
  }
  return map.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
}

double interpolate(const Tensor& map, std::size_t c, const Cell& k) {
  return (1.0 - k.lx) * (1.0 - k.ly) * pixel(map, c, k.x0, k.y0) +
         k.lx * (1.0 - k.ly) * pixel(map, c, k.x0 + 1, k.y0) +
         (1.0 - k.lx) * k.ly * pixel(map, c, k.x0, k.y0 + 1) +
         k.lx * k.ly * pixel(map, c, k.x0 + 1, k.y0 + 1);
}

void validate(const Tensor& input, const Kernel& kernel, const Tensor& offsets) {
  if (kernel.height % 2 == 0 || kernel.width % 2 == 0) {
    throw Error(ErrorKind::kShapeMismatch, "kernel extents must be odd");
  }
  if (kernel.weights.size() !=
          kernel.out_channels * kernel.in_channels * kernel.height * kernel.width ||
      kernel.bias.size() != kernel.out_channels) {
    throw Error(ErrorKind::kShapeMismatch, "kernel storage does not match its extents");
  }
  if (kernel.in_channels != input.channels()) {
    throw Error(ErrorKind::kShapeMismatch,
                "kernel expects " + std::to_string(kernel.in_channels) + " input channels, got " +
                    std::to_string(input.channels()));
  }
  if (!(offsets.shape() == Shape3{2 * kernel.taps(), input.height(), input.width()})) {
    throw Error(ErrorKind::kShapeMismatch, "offset field must be [2*taps, H, W] of the input");
  }
}

Tensor deform_conv_scaled(const Tensor& input, const Kernel& kernel, const Tensor& offsets,
                          double scale) {
  validate(input, kernel, offsets);
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const long half_h = static_cast<long>(kernel.height / 2);
  const long half_w = static_cast<long>(kernel.width / 2);

  Tensor out({kernel.out_channels, h, w});
  std::vector<double> acc(kernel.out_channels);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t o = 0; o < kernel.out_channels; ++o) acc[o] = kernel.bias[o];
      for (std::size_t i = 0; i < kernel.height; ++i) {
        for (std::size_t j = 0; j < kernel.width; ++j) {
          const std::size_t t = i * kernel.width + j;
          const double sy = double(y) + double(long(i) - half_h) + scale * offsets.at(2 * t, y, x);
          const double sx =
              double(x) + double(long(j) - half_w) + scale * offsets.at(2 * t + 1, y, x);
          const Cell cell = floor_cell(sx, sy);
          for (std::size_t c = 0; c < kernel.in_channels; ++c) {
            const double v = interpolate(input, c, cell);
            if (v == 0.0) continue;
            for (std::size_t o = 0; o < kernel.out_channels; ++o) {
              acc[o] += double(kernel.at(o, c, i, j)) * v;
            }
          }
        }
      }
      for (std::size_t o = 0; o < kernel.out_channels; ++o) {
        out.at(o, y, x) = static_cast<float>(acc[o]);
      }
    }
  }
  return out;
}

}  // namespace

Kernel::Kernel(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw)
    : out_channels(out),
      in_channels(in),
      height(kh),
      width(kw),
      weights(out * in * kh * kw, 0.0f),
      bias(out, 0.0f) {}

double bilinear_sample(const Tensor& map, std::size_t channel, double x, double y) {
  return interpolate(map, channel, floor_cell(x, y));
}

Tensor deform_conv(const Tensor& input, const Kernel& kernel, const Tensor& offsets) {
  return deform_conv_scaled(input, kernel, offsets, 1.0);
}

SymmetricPair symmetric_pair_forward(const Tensor& input, const Kernel& near_kernel,
                                     const Kernel& far_kernel, const Tensor& offsets,
                                     double offset_scale) {
  if (near_kernel.taps() != far_kernel.taps()) {
    throw Error(ErrorKind::kShapeMismatch, "paired kernels must have the same tap layout");
  }
  return {deform_conv_scaled(input, near_kernel, offsets, 1.0),
          deform_conv_scaled(input, far_kernel, offsets, offset_scale)};
}

DeformConvGrads deform_conv_grad(const Tensor& input, const Kernel& kernel, const Tensor& offsets,
                                 const Tensor& upstream) {
  validate(input, kernel, offsets);
  if (!(upstream.shape() == Shape3{kernel.out_channels, input.height(), input.width()})) {
    throw Error(ErrorKind::kShapeMismatch, "upstream gradient must match the output shape");
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const long half_h = static_cast<long>(kernel.height / 2);
  const long half_w = static_cast<long>(kernel.width / 2);

  std::vector<double> g_input(input.size(), 0.0);
  std::vector<double> g_weights(kernel.weights.size(), 0.0);
  std::vector<double> g_bias(kernel.out_channels, 0.0);
  std::vector<double> g_offsets(offsets.size(), 0.0);

  auto input_index = [&](std::size_t c, long x, long y) -> long {
    if (x < 0 || y < 0 || x >= long(w) || y >= long(h)) return -1;
    return static_cast<long>((c * h + std::size_t(y)) * w + std::size_t(x));
  };
  auto weight_index = [&](std::size_t o, std::size_t c, std::size_t t) {
    return (o * kernel.in_channels + c) * kernel.taps() + t;
  };

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t o = 0; o < kernel.out_channels; ++o) g_bias[o] += upstream.at(o, y, x);
      for (std::size_t i = 0; i < kernel.height; ++i) {
        for (std::size_t j = 0; j < kernel.width; ++j) {
          const std::size_t t = i * kernel.width + j;
          const double sy = double(y) + double(long(i) - half_h) + offsets.at(2 * t, y, x);
          const double sx = double(x) + double(long(j) - half_w) + offsets.at(2 * t + 1, y, x);
          const Cell k = left_cell(sx, sy);
          const double w00 = (1.0 - k.lx) * (1.0 - k.ly);
          const double w10 = k.lx * (1.0 - k.ly);
          const double w01 = (1.0 - k.lx) * k.ly;
          const double w11 = k.lx * k.ly;

          double g_sx = 0.0;
          double g_sy = 0.0;
          for (std::size_t c = 0; c < kernel.in_channels; ++c) {
            const double v00 = pixel(input, c, k.x0, k.y0);
            const double v10 = pixel(input, c, k.x0 + 1, k.y0);
            const double v01 = pixel(input, c, k.x0, k.y0 + 1);
            const double v11 = pixel(input, c, k.x0 + 1, k.y0 + 1);
            const double sample = w00 * v00 + w10 * v10 + w01 * v01 + w11 * v11;

            double g = 0.0;  // d(loss) / d(sample)
            for (std::size_t o = 0; o < kernel.out_channels; ++o) {
              const double u = upstream.at(o, y, x);
              g += u * kernel.weights[weight_index(o, c, t)];
              g_weights[weight_index(o, c, t)] += u * sample;
            }
            if (g == 0.0) continue;

            const long corners[4] = {input_index(c, k.x0, k.y0), input_index(c, k.x0 + 1, k.y0),
                                     input_index(c, k.x0, k.y0 + 1),
                                     input_index(c, k.x0 + 1, k.y0 + 1)};
            const double weights[4] = {w00, w10, w01, w11};
            for (int n = 0; n < 4; ++n) {
              if (corners[n] >= 0) g_input[std::size_t(corners[n])] += g * weights[n];
            }
            g_sx += g * ((1.0 - k.ly) * (v10 - v00) + k.ly * (v11 - v01));
            g_sy += g * ((1.0 - k.lx) * (v01 - v00) + k.lx * (v11 - v10));
          }
          g_offsets[(2 * t * h + y) * w + x] += g_sy;
          g_offsets[((2 * t + 1) * h + y) * w + x] += g_sx;
        }
      }
    }
  }

  auto to_float = [](const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
  };
  DeformConvGrads grads;
  grads.input = Tensor(input.shape(), to_float(g_input));
  grads.kernel = Kernel(kernel.out_channels, kernel.in_channels, kernel.height, kernel.width);
  grads.kernel.weights = to_float(g_weights);
  grads.kernel.bias = to_float(g_bias);
  grads.offsets = Tensor(offsets.shape(), to_float(g_offsets));
  return grads;
}

Tensor directional_pool(const Tensor& map, PoolDirection direction) {
  Tensor out = map;
  const std::size_t h = map.height();
  const std::size_t w = map.width();
  for (std::size_t c = 0; c < map.channels(); ++c) {
    switch (direction) {
      case PoolDirection::kLeft:
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = w; x-- > 1;)
            out.at(c, y, x - 1) = std::max(out.at(c, y, x - 1), out.at(c, y, x));
        break;
      case PoolDirection::kRight:
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 1; x < w; ++x)
            out.at(c, y, x) = std::max(out.at(c, y, x), out.at(c, y, x - 1));
        break;
      case PoolDirection::kUp:
        for (std::size_t y = h; y-- > 1;)
          for (std::size_t x = 0; x < w; ++x)
            out.at(c, y - 1, x) = std::max(out.at(c, y - 1, x), out.at(c, y, x));
        break;
      case PoolDirection::kDown:
        for (std::size_t y = 1; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            out.at(c, y, x) = std::max(out.at(c, y, x), out.at(c, y - 1, x));
        break;
    }
  }
  return out;
}

}  // namespace midbox
