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

#include "csrn/optimizer.hpp"

#include <cmath>
#include <random>

namespace csrn {

double LrSchedule::at_epoch(int epoch) const {
  double rate = base;
  for (int e : decay_epochs) {
    if (e <= epoch) rate *= factor;
  }
  return rate;
}

double lr_at_epoch(const LrSchedule& schedule, int epoch) { return schedule.at_epoch(epoch); }

template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const GradientMap<Scalar>& grads,
               AdamState<Scalar>& state, double rate) {
  for (const auto& p : params.entries()) {
    const auto it = grads.find(p.name);
    if (it == grads.end()) {
      throw ConsistencyError("adam_step: missing gradient for '" + p.name + "'");
    }
    require_same_shape(it->second.shape(), p.value.shape(), "adam_step gradient '" + p.name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(state.beta2, t));
  const auto eps = static_cast<Scalar>(state.epsilon);
  const auto lr = static_cast<Scalar>(rate);

  for (auto& p : params.entries()) {
    const auto& g = grads.at(p.name).array();
    auto m_it = state.first_moment.try_emplace(p.name, Tensor<Scalar>::zeros(p.value.shape())).first;
    auto v_it = state.second_moment.try_emplace(p.name, Tensor<Scalar>::zeros(p.value.shape())).first;
    auto& m = m_it->second.array();
    auto& v = v_it->second.array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    p.value.array() -= lr * (m / correction1) / ((v / correction2).sqrt() + eps);
  }
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

template <typename Scalar>
ParamStore<Scalar> init_params(const CsrnConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore<Scalar> store;
  for (const auto& layer : layer_manifest(config)) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.fan_in()));
    Tensor<Scalar> weight(
        Shape{layer.conv.out_channels, layer.in_channels, layer.conv.kernel, layer.conv.kernel});
    for (Index i = 0; i < weight.size(); ++i) {
      weight.data()[i] = static_cast<Scalar>((2.0 * unit_uniform(rng()) - 1.0) * bound);
    }
    store.add(layer.name + ".weight", layer.partition, std::move(weight));
    if (layer.conv.bias) {
      store.add(layer.name + ".bias", layer.partition,
                Tensor<Scalar>::zeros(Shape{layer.conv.out_channels, 1, 1, 1}));
    }
  }
  return store;
}

template void adam_step(ParamStore<float>&, const GradientMap<float>&, AdamState<float>&, double);
template void adam_step(ParamStore<double>&, const GradientMap<double>&, AdamState<double>&,
                        double);
template ParamStore<float> init_params(const CsrnConfig&, std::uint64_t);
template ParamStore<double> init_params(const CsrnConfig&, std::uint64_t);

}  // namespace csrn
