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

#include "csrn/autodiff.hpp"
#include "csrn/config.hpp"
#include "csrn/params.hpp"

namespace csrn {

/// The K measurement groups F_m^k, each (batch, channels_k, H/B, W/B).
template <typename Scalar>
struct MeasurementSet {
  std::vector<Tensor<Scalar>> groups;
  SampleRatio ratio;
  Index block = 0;
};

template <typename Scalar>
struct Reconstruction {
  Tensor<Scalar> initial;  // x_i
  Tensor<Scalar> final;    // x_f
};

template <typename Scalar>
struct ParamCounts {
  Index sampling = 0;
  Index initial = 0;
  Index interface = 0;
  Index residual = 0;

  /// Reconstruction-side parameters; sampling is excluded.
  Index reconstruction_total() const { return initial + interface + residual; }
};

/// Parameters bound as graph values, either on a tape (training) or untracked (inference).
template <typename Scalar>
class BoundParams {
 public:
  const Var<Scalar>& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  void set(const std::string& name, Var<Scalar> var) { vars_[name] = std::move(var); }
  const std::map<std::string, Var<Scalar>>& all() const { return vars_; }

  /// Tape gradients keyed by parameter name.
  std::map<std::string, Tensor<Scalar>> gradients(const Gradients<Scalar>& grads) const;

 private:
  template <typename>
  friend class Csrn;
  std::map<std::string, Var<Scalar>> vars_;
};

template <typename Scalar>
struct ForwardVars {
  Var<Scalar> initial;
  Var<Scalar> final;
  Var<Scalar> initial_features;  // F_i
};

/// Sampling layers plus the two reconstruction sub-networks.
template <typename Scalar>
class Csrn {
 public:
  Csrn(CsrnConfig config, ParamStore<Scalar> params);

  /// Builds the architecture for `config` with freshly initialized weights.
  static Csrn build(const CsrnConfig& config, std::uint64_t seed);

  const CsrnConfig& config() const { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }

  ParamCounts<Scalar> count_params() const;

  BoundParams<Scalar> bind(Tape<Scalar>* tape) const;

  // Graph-level stages.
  std::vector<Var<Scalar>> sample(const BoundParams<Scalar>& p, const Var<Scalar>& x) const;
  /// Returns {x_i, F_i}.
  std::pair<Var<Scalar>, Var<Scalar>> initial_reconstruct(
      const BoundParams<Scalar>& p, std::span<const Var<Scalar>> groups) const;
  /// Ablation path: one bias-free Conv(B², 1, 1) + PixelShuffle(B) for x_i, and a
  /// Conv(m/4, 3, 1) adapter producing F_i so the residual network is unchanged.
  std::pair<Var<Scalar>, Var<Scalar>> simple_initial_reconstruct(
      const BoundParams<Scalar>& p, std::span<const Var<Scalar>> groups) const;
  Var<Scalar> compress_features(const BoundParams<Scalar>& p, const Var<Scalar>& fi) const;
  Var<Scalar> residual_block(const BoundParams<Scalar>& p, Index rrfm,
                             const Var<Scalar>& z) const;
  Var<Scalar> rrfm_forward(const BoundParams<Scalar>& p, Index rrfm, const Var<Scalar>& f) const;
  Var<Scalar> extract_features(const BoundParams<Scalar>& p, const Var<Scalar>& fc) const;
  Var<Scalar> fuse_residual(const BoundParams<Scalar>& p, const Var<Scalar>& fc,
                            const Var<Scalar>& fh) const;
  ForwardVars<Scalar> reconstruct(const BoundParams<Scalar>& p,
                                  std::span<const Var<Scalar>> groups) const;
  ForwardVars<Scalar> forward(const BoundParams<Scalar>& p, const Var<Scalar>& x) const;

  // Inference-mode convenience wrappers.
  MeasurementSet<Scalar> sample(const Tensor<Scalar>& x) const;
  std::pair<Tensor<Scalar>, Tensor<Scalar>> initial_reconstruct(
      const MeasurementSet<Scalar>& fm) const;
  Tensor<Scalar> compress_features(const Tensor<Scalar>& fi) const;
  Tensor<Scalar> rrfm_forward(Index rrfm, const Tensor<Scalar>& f) const;
  Tensor<Scalar> extract_features(const Tensor<Scalar>& fc) const;
  Tensor<Scalar> fuse_residual(const Tensor<Scalar>& fc, const Tensor<Scalar>& fh) const;
  Reconstruction<Scalar> reconstruct(const MeasurementSet<Scalar>& fm) const;
  Reconstruction<Scalar> forward(const Tensor<Scalar>& x) const;

  /// Element count of every activation the residual sub-network produces for one
  /// (1, 1, height, width) input.
  Index residual_activation_elements(Index height, Index width) const;

 private:
  Var<Scalar> conv(const BoundParams<Scalar>& p, const std::string& layer,
                   const Var<Scalar>& x) const;
  const LayerSpec& layer(const std::string& name) const;

  CsrnConfig config_;
  std::vector<LayerSpec> layers_;
  ParamStore<Scalar> params_;
};

extern template class Csrn<float>;
extern template class Csrn<double>;
extern template class BoundParams<float>;
extern template class BoundParams<double>;

}  // namespace csrn
