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

#include <string>
#include <vector>

#include "csrn/config.hpp"
#include "csrn/ops.hpp"
#include "csrn/tensor.hpp"

namespace csrn {

/// Which sub-network owns a parameter. `interface` is the feature adapter that the
/// simple-initial ablation needs; it is counted apart from the initial sub-network.
enum class Partition { sampling, initial, interface, residual };

std::string to_string(Partition p);

/// One convolution in the architecture manifest.
struct LayerSpec {
  std::string name;
  Partition partition;
  Index in_channels;
  ConvSpec conv;

  Index weight_count() const { return conv.out_channels * in_channels * conv.kernel * conv.kernel; }
  Index bias_count() const { return conv.bias ? conv.out_channels : 0; }
  Index fan_in() const { return in_channels * conv.kernel * conv.kernel; }
  bool operator==(const LayerSpec& o) const {
    return name == o.name && partition == o.partition && in_channels == o.in_channels &&
           conv.out_channels == o.conv.out_channels && conv.kernel == o.conv.kernel &&
           conv.stride == o.conv.stride && conv.padding == o.conv.padding &&
           conv.bias == o.conv.bias;
  }
};

/// Ordered list of every convolution the configuration builds.
std::vector<LayerSpec> layer_manifest(const CsrnConfig& config);

template <typename Scalar>
struct Param {
  std::string name;
  Partition partition;
  Tensor<Scalar> value;
};

/// Named parameter tensors in manifest order ("<layer>.weight", "<layer>.bias").
template <typename Scalar>
class ParamStore {
 public:
  void add(std::string name, Partition partition, Tensor<Scalar> value);

  std::size_t size() const { return params_.size(); }
  bool contains(const std::string& name) const;
  Tensor<Scalar>& at(const std::string& name);
  const Tensor<Scalar>& at(const std::string& name) const;

  std::vector<Param<Scalar>>& entries() { return params_; }
  const std::vector<Param<Scalar>>& entries() const { return params_; }

  /// Scalar count of all tensors in one partition.
  Index scalar_count(Partition p) const;

  bool identical(const ParamStore& other) const;

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& p : params_) out.add(p.name, p.partition, p.value.template cast<Other>());
    return out;
  }

 private:
  std::vector<Param<Scalar>> params_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace csrn
