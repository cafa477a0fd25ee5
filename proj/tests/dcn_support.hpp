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

// Random instances and the finite-difference check shared by the unit tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>

#include "midbox/symdcn.hpp"
#include "oracles.hpp"

namespace dcn_support {

using midbox::Kernel;
using midbox::Shape3;
using midbox::Tensor;

inline Tensor random_tensor(Shape3 shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<float> u{float(lo), float(hi)};
  Tensor t(shape);
  for (float& v : t.data()) v = u(rng);
  return t;
}

inline Kernel random_kernel(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Kernel k(out, in, kh, kw);
  for (float& v : k.weights) v = u(rng);
  for (float& v : k.bias) v = u(rng);
  return k;
}

// Offsets whose fractional parts stay in [0.1, 0.9], so every sampling
// coordinate sits at least 0.1 from an integer.
inline Tensor off_grid_offsets(Shape3 shape, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> whole(-2, 1);
  std::uniform_real_distribution<float> frac(0.1f, 0.9f);
  Tensor t(shape);
  for (float& v : t.data()) v = float(whole(rng)) + frac(rng);
  return t;
}

struct GradCheck {
  double worst_relative = 0.0;
  std::size_t checked = 0;
};

// Relative error with a floor on the denominator so exact zeros compare in
// absolute terms.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Central differences (step h) of sum(upstream * reference_conv) with respect
// to every input, weight, bias and offset entry.
inline GradCheck check_gradients(const Tensor& input, const Kernel& kernel, const Tensor& offsets,
                                 const Tensor& upstream, double h = 1e-3) {
  const midbox::DeformConvGrads g = midbox::deform_conv_grad(input, kernel, offsets, upstream);
  oracle::DenseInput in = oracle::to_dense(input);
  oracle::DenseKernel k = oracle::to_dense(kernel);
  oracle::DenseInput off = oracle::to_dense(offsets);
  const oracle::DenseInput up = oracle::to_dense(upstream);
  auto loss = [&]() { return oracle::contract(oracle::deform_conv(in, k, off), up); };

  GradCheck result;
  auto probe = [&](double& x, double analytic) {
    const double saved = x;
    x = saved + h;
    const double plus = loss();
    x = saved - h;
    const double minus = loss();
    x = saved;
    const double numeric = (plus - minus) / (2 * h);
    result.worst_relative = std::max(result.worst_relative, relative_error(analytic, numeric));
    ++result.checked;
  };
  for (std::size_t i = 0; i < in.v.size(); ++i) probe(in.v[i], g.input.data()[i]);
  for (std::size_t i = 0; i < k.w.size(); ++i) probe(k.w[i], g.kernel.weights[i]);
  for (std::size_t i = 0; i < k.bias.size(); ++i) probe(k.bias[i], g.kernel.bias[i]);
  for (std::size_t i = 0; i < off.v.size(); ++i) probe(off.v[i], g.offsets.data()[i]);
  return result;
}

}  // namespace dcn_support
