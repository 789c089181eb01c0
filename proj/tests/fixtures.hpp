// Copyright 2026 The CSRN Authors
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

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "csrn/image.hpp"
#include "csrn/model.hpp"

namespace csrn::testing {

inline ImageBuffer noise_image(Index w, Index h, Index ch, std::uint64_t seed) {
  ImageBuffer img(w, h, ch);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.f, 1.f);
  for (auto& v : img.values) v = d(rng);
  return img;
}

// Smooth shading plus a few edges and mild texture, quantized to 8 bits.
inline ImageBuffer scene_image(Index w, Index h, Index ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 2 + 6 * u(rng), fy = 2 + 6 * u(rng), phase = 6.28 * u(rng);
  const double cx = w * u(rng), cy = h * u(rng), rad = 0.2 * (w + h) * (0.5 + u(rng));
  ImageBuffer img(w, h, ch);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double v = 0.45 + 0.25 * std::sin(fx * x / w + fy * y / h + phase);
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < rad * rad) v += 0.2;
      v += 0.04 * (u(rng) - 0.5);
      for (Index c = 0; c < ch; ++c) {
        const double t = std::clamp(v + 0.05 * static_cast<double>(c), 0.0, 1.0);
        img.at(y, x, c) = static_cast<float>(std::round(t * 255.0) / 255.0);
      }
    }
  return img;
}

/// Runs one manifest convolution of `model` directly through the tensor kernel.
template <typename Scalar>
Tensor<Scalar> conv_layer(const Csrn<Scalar>& model, const std::string& name,
                          const Tensor<Scalar>& x) {
  for (const auto& l : model.layers()) {
    if (l.name != name) continue;
    const auto& w = model.params().at(name + ".weight");
    if (!l.conv.bias) return conv2d<Scalar>(x, w, nullptr, l.conv);
    return conv2d<Scalar>(x, w, &model.params().at(name + ".bias"), l.conv);
  }
  throw std::runtime_error("no layer " + name);
}

// Fresh models have zero biases, which would hide bias handling.
template <typename Scalar>
void randomize_biases(ParamStore<Scalar>& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  for (auto& e : p.entries())
    if (e.name.ends_with(".bias"))
      for (Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = static_cast<Scalar>(d(rng));
}

}  // namespace csrn::testing
