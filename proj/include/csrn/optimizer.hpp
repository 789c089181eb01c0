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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csrn/config.hpp"
#include "csrn/params.hpp"

namespace csrn {

/// Piecewise-constant step decay: base · factor^(number of decay epochs <= epoch).
struct LrSchedule {
  double base = 5e-4;
  double factor = 0.1;
  std::vector<int> decay_epochs = {50, 80};

  double at_epoch(int epoch) const;
};

double lr_at_epoch(const LrSchedule& schedule, int epoch);

template <typename Scalar>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, Tensor<Scalar>> first_moment;
  std::map<std::string, Tensor<Scalar>> second_moment;
};

template <typename Scalar>
using GradientMap = std::map<std::string, Tensor<Scalar>>;

/// One bias-corrected Adam update of every parameter. Throws ConsistencyError when a
/// parameter has no gradient.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const GradientMap<Scalar>& grads,
               AdamState<Scalar>& state, double rate);

/// Weights uniform in ±sqrt(1/fan_in) drawn in manifest order from one seeded stream;
/// biases zero.
template <typename Scalar>
ParamStore<Scalar> init_params(const CsrnConfig& config, std::uint64_t seed);

/// Uniform [0, 1) from the top 53 bits of a 64-bit draw; identical on every platform.
double unit_uniform(std::uint64_t bits);

}  // namespace csrn
