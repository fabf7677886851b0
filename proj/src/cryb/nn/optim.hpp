// Copyright 2026 The cryb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <span>

#include "cryb/common/rng.hpp"
#include "cryb/nn/tensor.hpp"

namespace cryb::nn {

/// Heavy-ball SGD: buf <- momentum * buf + grad; value <- value - lr * buf.
template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, double lr, double momentum = 0.9) {
  for (Parameter<T>* p : params) {
    auto& v = p->value.storage();
    auto& g = p->grad.storage();
    auto& buf = p->momentum_buf.storage();
    for (std::size_t i = 0; i < v.size(); ++i) {
      buf[i] = static_cast<T>(momentum * buf[i] + g[i]);
      v[i] = static_cast<T>(v[i] - lr * buf[i]);
    }
  }
}

template <typename T>
void zero_grad(std::span<Parameter<T>* const> params) {
  for (Parameter<T>* p : params) p->zero_grad();
}

/// Glorot bound k = sqrt(6 / (fan_in + fan_out)). For rank > 2 shapes the
/// trailing dims form the receptive field: fan_in = shape[1] * field,
/// fan_out = shape[0] * field.
inline double glorot_bound(const std::vector<int>& shape) {
  require(shape.size() >= 2, Errc::BadShape, "Glorot init needs rank >= 2, got " + shape_string(shape));
  double field = 1.0;
  for (std::size_t i = 2; i < shape.size(); ++i) field *= shape[i];
  const double fan_in = shape[1] * field;
  const double fan_out = shape[0] * field;
  return std::sqrt(6.0 / (fan_in + fan_out));
}

/// I.i.d. draws from the open interval (-k, k).
template <typename T>
Tensor<T> glorot_uniform(const std::vector<int>& shape, Rng& rng) {
  const double k = glorot_bound(shape);
  const T bound = static_cast<T>(k);
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    T v = static_cast<T>(rng.uniform(-k, k));
    if (v >= bound) v = std::nextafter(bound, T(0));
    if (v <= -bound) v = std::nextafter(-bound, T(0));
    out[i] = v;
  }
  return out;
}

}  // namespace cryb::nn
