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

#include "midbox/tensor.hpp"

#include <cmath>
#include <string>

#include "midbox/error.hpp"

namespace midbox {

namespace {

std::string describe(const Shape3& s) {
  return "[" + std::to_string(s.channels) + "," + std::to_string(s.height) + "," +
         std::to_string(s.width) + "]";
}

}  // namespace

Tensor::Tensor(Shape3 shape, float fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape3 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error(ErrorKind::kShapeMismatch, "tensor data length " + std::to_string(data_.size()) +
                                               " does not match shape " + describe(shape_));
  }
}

std::span<float> Tensor::channel(std::size_t c) {
  return std::span<float>(data_).subspan(c * shape_.plane(), shape_.plane());
}

std::span<const float> Tensor::channel(std::size_t c) const {
  return std::span<const float>(data_).subspan(c * shape_.plane(), shape_.plane());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": " + describe(a.shape()) +
                                               " vs " + describe(b.shape()));
  }
}

}  // namespace midbox
