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

// Deformable convolution (stride 1, same padding) with analytic gradients,
// the shared-offset symmetric pair built on it, and directional pooling.
//
// Offset fields are [2T, H, W] for T = kh * kw taps: channel 2t holds the
// row (dy) offset of tap t and channel 2t + 1 the column (dx) offset, taps in
// row-major kernel order.

#include <cstddef>
#include <vector>

#include "midbox/tensor.hpp"

namespace midbox {

struct Kernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t height = 0;  // odd
  std::size_t width = 0;   // odd
  std::vector<float> weights;  // [out, in, height, width]
  std::vector<float> bias;     // [out]

  Kernel() = default;
  Kernel(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw);

  std::size_t taps() const { return height * width; }
  float& at(std::size_t o, std::size_t c, std::size_t i, std::size_t j) {
    return weights[((o * in_channels + c) * height + i) * width + j];
  }
  float at(std::size_t o, std::size_t c, std::size_t i, std::size_t j) const {
    return weights[((o * in_channels + c) * height + i) * width + j];
  }
};

/// Bilinear interpolation of `channel` at (x, y); neighbours outside the map
/// contribute zero.
double bilinear_sample(const Tensor& map, std::size_t channel, double x, double y);

Tensor deform_conv(const Tensor& input, const Kernel& kernel, const Tensor& offsets);

struct SymmetricPair {
  Tensor near;  // driven by the offsets as given
  Tensor far;   // driven by offset_scale * offsets
};

/// Two deformable convolutions over one feature map sharing a single offset
/// field; the second branch samples at `offset_scale` times the offsets, so a
/// field pointing from a midpoint to the center points the second branch at
/// the symmetric midpoint.
SymmetricPair symmetric_pair_forward(const Tensor& input, const Kernel& near_kernel,
                                     const Kernel& far_kernel, const Tensor& offsets,
                                     double offset_scale = 2.0);

struct DeformConvGrads {
  Tensor input;
  Kernel kernel;  // bias gradient in kernel.bias
  Tensor offsets;
};

/// Gradients of sum(upstream * deform_conv(input, kernel, offsets)). At
/// integer sampling coordinates the offset subgradient is taken from the cell
/// on the left (above).
DeformConvGrads deform_conv_grad(const Tensor& input, const Kernel& kernel, const Tensor& offsets,
                                 const Tensor& upstream);

enum class PoolDirection { kLeft, kRight, kUp, kDown };

/// Running maximum scanned from the far border: kLeft gives
/// out[y][x] = max over x' >= x, kRight over x' <= x, kUp over y' >= y and
/// kDown over y' <= y.
Tensor directional_pool(const Tensor& map, PoolDirection direction);

}  // namespace midbox
