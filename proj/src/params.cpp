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

#include "csrn/params.hpp"

#include <algorithm>

namespace csrn {

std::string to_string(Partition p) {
  switch (p) {
    case Partition::sampling: return "sampling";
    case Partition::initial: return "initial";
    case Partition::interface: return "interface";
    case Partition::residual: return "residual";
  }
  return "?";
}

namespace {

LayerSpec layer(std::string name, Partition part, Index in, Index out, Index k, Index s, Index p,
                bool bias = true) {
  return {std::move(name), part, in, ConvSpec{out, k, s, p, bias}};
}

}  // namespace

std::vector<LayerSpec> layer_manifest(const CsrnConfig& config) {
  config.validate();
  const Index m = config.filters;
  const Index b = config.block;
  const auto plan = config.measurement_plan();
  std::vector<LayerSpec> layers;

  for (std::size_t k = 0; k < plan.size(); ++k) {
    layers.push_back(layer("sampling.g" + std::to_string(k), Partition::sampling, 1, plan[k], b,
                           b, 0, false));
  }

  Index features = 0;
  if (config.progressive_init) {
    const Index up_in = config.inner_upscale();
    const Index up_out = config.outer_upscale();
    for (std::size_t k = 0; k < plan.size(); ++k) {
      const std::string block = "initial.block" + std::to_string(k);
      layers.push_back(layer(block + ".expand", Partition::initial, plan[k],
                             (m / 2) * up_in * up_in, 1, 1, 0));
      layers.push_back(layer(block + ".inter", Partition::initial, m / 2, m / 2, 3, 1, 1));
      layers.push_back(layer(block + ".lift", Partition::initial, m / 2,
                             (m / 4) * up_out * up_out, 1, 1, 0));
      if (k == 0) {
        features = m / 4;
      } else {
        layers.push_back(layer("initial.fuse" + std::to_string(k), Partition::initial,
                               features + m / 4, m / 2, 1, 1, 0));
        features = m / 2;
      }
    }
    layers.push_back(layer("initial.head", Partition::initial, features, 1, 3, 1, 1));
  } else {
    Index total = 0;
    for (Index c : plan) total += c;
    layers.push_back(layer("initial.map", Partition::initial, total, b * b, 1, 1, 0, false));
    layers.push_back(layer("interface.features", Partition::interface, 1, m / 4, 3, 1, 1));
    features = m / 4;
  }

  if (config.use_fcm) {
    layers.push_back(layer("residual.fcm", Partition::residual, features, m, 2, 2, 0));
  } else {
    layers.push_back(layer("residual.fcm", Partition::residual, features, m, 3, 1, 1));
  }
  for (Index j = 0; j < config.rrfm_count; ++j) {
    const std::string prefix = "residual.rrfm" + std::to_string(j);
    layers.push_back(layer(prefix + ".conv1", Partition::residual, m, m, 3, 1, 1));
    layers.push_back(layer(prefix + ".conv2", Partition::residual, m, m, 3, 1, 1));
    if (config.use_rrfm) {
      layers.push_back(
          layer(prefix + ".fuse", Partition::residual, config.recurrences * m, m, 1, 1, 0));
    }
  }
  layers.push_back(layer("residual.ffm.conv", Partition::residual, m, m, 3, 1, 1));
  layers.push_back(
      layer("residual.ffm.out", Partition::residual, config.use_fcm ? m / 4 : m, 1, 3, 1, 1));
  return layers;
}

template <typename Scalar>
void ParamStore<Scalar>::add(std::string name, Partition partition, Tensor<Scalar> value) {
  if (contains(name)) throw ConsistencyError("duplicate parameter '" + name + "'");
  params_.push_back({std::move(name), partition, std::move(value)});
}

template <typename Scalar>
bool ParamStore<Scalar>::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Param<Scalar>& p) { return p.name == name; });
}

template <typename Scalar>
Tensor<Scalar>& ParamStore<Scalar>::at(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw ConsistencyError("no parameter named '" + name + "'");
}

template <typename Scalar>
const Tensor<Scalar>& ParamStore<Scalar>::at(const std::string& name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

template <typename Scalar>
Index ParamStore<Scalar>::scalar_count(Partition p) const {
  Index total = 0;
  for (const auto& param : params_) {
    if (param.partition == p) total += param.value.size();
  }
  return total;
}

template <typename Scalar>
bool ParamStore<Scalar>::identical(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.partition != b.partition || !a.value.identical(b.value)) return false;
  }
  return true;
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace csrn
