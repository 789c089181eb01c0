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

#include <span>

#include "csrn/tensor.hpp"

namespace csrn {

/// Conv(n, k, s) with symmetric zero padding p. Cross-correlation semantics.
struct ConvSpec {
  Index out_channels = 1;
  Index kernel = 1;
  Index stride = 1;
  Index padding = 0;
  bool bias = true;

  /// Output extent for an input extent; throws GeometryError when the stride does not tile.
  Index output_extent(Index in, const char* axis) const;
};

// Forward/backward kernels on plain tensors. The differentiable wrappers live in autodiff.hpp.

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>* bias, const ConvSpec& spec);

/// Accumulates into whichever of grad_input/grad_weight/grad_bias is non-null.
template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                     const Tensor<Scalar>& grad_output, const ConvSpec& spec,
                     Tensor<Scalar>* grad_input, Tensor<Scalar>* grad_weight,
                     Tensor<Scalar>* grad_bias);

/// (n, c·u², h, w) -> (n, c, h·u, w·u); out(y, x) reads channel u·(y mod u) + (x mod u).
template <typename Scalar>
Tensor<Scalar> pixel_shuffle(const Tensor<Scalar>& input, Index upscale);

/// Exact inverse of pixel_shuffle.
template <typename Scalar>
Tensor<Scalar> pixel_unshuffle(const Tensor<Scalar>& input, Index downscale);

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> concat_channels(std::span<const Tensor<Scalar>* const> inputs);

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

/// Mean of squared differences over all elements.
template <typename Scalar>
Scalar mse(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

/// Sum of squared differences over all elements.
template <typename Scalar>
Scalar sse(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

}  // namespace csrn
