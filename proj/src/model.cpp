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

#include "csrn/model.hpp"

#include "csrn/optimizer.hpp"

namespace csrn {

template <typename Scalar>
const Var<Scalar>& BoundParams<Scalar>::operator[](const std::string& name) const {
  const auto it = vars_.find(name);
  if (it == vars_.end()) throw ConsistencyError("no bound parameter named '" + name + "'");
  return it->second;
}

template <typename Scalar>
std::map<std::string, Tensor<Scalar>> BoundParams<Scalar>::gradients(
    const Gradients<Scalar>& grads) const {
  std::map<std::string, Tensor<Scalar>> out;
  for (const auto& [name, var] : vars_) {
    if (var.id() >= 0 && grads.contains(var.id())) {
      out.emplace(name, grads.at(var.id()));
    } else {
      out.emplace(name, Tensor<Scalar>::zeros(var.shape()));
    }
  }
  return out;
}

template <typename Scalar>
Csrn<Scalar>::Csrn(CsrnConfig config, ParamStore<Scalar> params)
    : config_(config), layers_(layer_manifest(config)), params_(std::move(params)) {
  for (const auto& l : layers_) {
    const Shape w{l.conv.out_channels, l.in_channels, l.conv.kernel, l.conv.kernel};
    if (!params_.contains(l.name + ".weight")) {
      throw ConsistencyError("parameter store lacks '" + l.name + ".weight'");
    }
    require_same_shape(params_.at(l.name + ".weight").shape(), w, l.name + ".weight");
    if (l.conv.bias) {
      if (!params_.contains(l.name + ".bias")) {
        throw ConsistencyError("parameter store lacks '" + l.name + ".bias'");
      }
      require_same_shape(params_.at(l.name + ".bias").shape(), Shape{l.conv.out_channels, 1, 1, 1},
                         l.name + ".bias");
    }
  }
}

template <typename Scalar>
Csrn<Scalar> Csrn<Scalar>::build(const CsrnConfig& config, std::uint64_t seed) {
  return Csrn(config, init_params<Scalar>(config, seed));
}

template <typename Scalar>
ParamCounts<Scalar> Csrn<Scalar>::count_params() const {
  ParamCounts<Scalar> c;
  c.sampling = params_.scalar_count(Partition::sampling);
  c.initial = params_.scalar_count(Partition::initial);
  c.interface = params_.scalar_count(Partition::interface);
  c.residual = params_.scalar_count(Partition::residual);
  return c;
}

template <typename Scalar>
BoundParams<Scalar> Csrn<Scalar>::bind(Tape<Scalar>* tape) const {
  BoundParams<Scalar> bound;
  for (const auto& p : params_.entries()) {
    bound.vars_.emplace(p.name, tape ? tape->parameter(p.value) : Var<Scalar>(p.value));
  }
  return bound;
}

template <typename Scalar>
const LayerSpec& Csrn<Scalar>::layer(const std::string& name) const {
  for (const auto& l : layers_) {
    if (l.name == name) return l;
  }
  throw ConsistencyError("architecture has no layer '" + name + "'");
}

template <typename Scalar>
Var<Scalar> Csrn<Scalar>::conv(const BoundParams<Scalar>& p, const std::string& name,
                               const Var<Scalar>& x) const {
  const auto& spec = layer(name);
  const Var<Scalar>* bias = spec.conv.bias ? &p[name + ".bias"] : nullptr;
  return conv2d(x, p[name + ".weight"], bias, spec.conv);
}

template <typename Scalar>
std::vector<Var<Scalar>> Csrn<Scalar>::sample(const BoundParams<Scalar>& p,
                                              const Var<Scalar>& x) const {
  if (x.shape().c != 1) {
    throw DimensionError("sample: expected a single-channel image, got " + x.shape().str());
  }
  std::vector<Var<Scalar>> groups;
  const auto plan = config_.measurement_plan();
  for (std::size_t k = 0; k < plan.size(); ++k) {
    groups.push_back(conv(p, "sampling.g" + std::to_string(k), x));
  }
  return groups;
}

template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> Csrn<Scalar>::initial_reconstruct(
    const BoundParams<Scalar>& p, std::span<const Var<Scalar>> groups) const {
  const auto plan = config_.measurement_plan();
  if (groups.size() != plan.size()) {
    throw ConsistencyError("initial_reconstruct: expected " + std::to_string(plan.size()) +
                           " measurement groups, got " + std::to_string(groups.size()));
  }
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (groups[k].shape().c != plan[k]) {
      throw ConsistencyError("initial_reconstruct: group " + std::to_string(k) + " has " +
                             std::to_string(groups[k].shape().c) + " channels, expected " +
                             std::to_string(plan[k]));
    }
  }
  if (!config_.progressive_init) return simple_initial_reconstruct(p, groups);

  Var<Scalar> features;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const std::string block = "initial.block" + std::to_string(k);
    auto f = conv(p, block + ".expand", groups[k]);
    f = pixel_shuffle(f, config_.inner_upscale());
    f = conv(p, block + ".inter", f);
    f = conv(p, block + ".lift", f);
    f = pixel_shuffle(f, config_.outer_upscale());
    if (k == 0) {
      features = f;
    } else {
      const std::array<Var<Scalar>, 2> pair = {features, f};
      features = conv(p, "initial.fuse" + std::to_string(k), concat_channels<Scalar>(pair));
    }
  }
  return {conv(p, "initial.head", features), features};
}

template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> Csrn<Scalar>::simple_initial_reconstruct(
    const BoundParams<Scalar>& p, std::span<const Var<Scalar>> groups) const {
  if (config_.progressive_init) {
    throw ConfigError("simple_initial_reconstruct requires the simple-init variant");
  }
  const auto all = groups.size() == 1 ? groups[0] : concat_channels<Scalar>(groups);
  auto xi = pixel_shuffle(conv(p, "initial.map", all), config_.block);
  auto fi = conv(p, "interface.features", xi);
  return {xi, fi};
}

template <typename Scalar>
Var<Scalar> Csrn<Scalar>::compress_features(const BoundParams<Scalar>& p,
                                            const Var<Scalar>& fi) const {
  if (config_.use_fcm && (fi.shape().h % 2 != 0 || fi.shape().w % 2 != 0)) {
    throw GeometryError("compress_features: spatial dims must be even, got " + fi.shape().str());
  }
  return relu(conv(p, "residual.fcm", fi));
}

template <typename Scalar>
Var<Scalar> Csrn<Scalar>::residual_block(const BoundParams<Scalar>& p, Index rrfm,
                                         const Var<Scalar>& z) const {
  const std::string prefix = "residual.rrfm" + std::to_string(rrfm);
  return add(z, conv(p, prefix + ".conv2", relu(conv(p, prefix + ".conv1", z))));
}

template <typename Scalar>
Var<Scalar> Csrn<Scalar>::rrfm_forward(const BoundParams<Scalar>& p, Index rrfm,
                                       const Var<Scalar>& f) const {
  if (f.shape().c != config_.filters) {
    throw DimensionError("rrfm_forward: channels axis mismatch, expected " +
                         std::to_string(config_.filters) + ", got " +
                         std::to_string(f.shape().c));
  }
  if (!config_.use_rrfm) return residual_block(p, rrfm, f);
  std::vector<Var<Scalar>> states;
  Var<Scalar> r = f;
  for (Index t = 0; t < config_.recurrences; ++t) {
    r = residual_block(p, rrfm, r);
    states.push_back(r);
  }
  return conv(p, "residual.rrfm" + std::to_string(rrfm) + ".fuse",
              concat_channels<Scalar>(states));
}

template <typename Scalar>
Var<Scalar> Csrn<Scalar>::extract_features(const BoundParams<Scalar>& p,
                                           const Var<Scalar>& fc) const {
  Var<Scalar> f = fc;
  for (Index j = 0; j < config_.rrfm_count; ++j) f = rrfm_forward(p, j, f);
  return f;
}

template <typename Scalar>
Var<Scalar> Csrn<Scalar>::fuse_residual(const BoundParams<Scalar>& p, const Var<Scalar>& fc,
                                        const Var<Scalar>& fh) const {
  auto f = relu(conv(p, "residual.ffm.conv", add(fc, fh)));
  if (config_.use_fcm) f = pixel_shuffle(f, 2);
  return conv(p, "residual.ffm.out", f);
}

template <typename Scalar>
ForwardVars<Scalar> Csrn<Scalar>::reconstruct(const BoundParams<Scalar>& p,
                                              std::span<const Var<Scalar>> groups) const {
  auto [xi, fi] = initial_reconstruct(p, groups);
  const auto fc = compress_features(p, fi);
  const auto fh = extract_features(p, fc);
  const auto xr = fuse_residual(p, fc, fh);
  return {xi, add(xi, xr), fi};
}

template <typename Scalar>
ForwardVars<Scalar> Csrn<Scalar>::forward(const BoundParams<Scalar>& p,
                                          const Var<Scalar>& x) const {
  const auto groups = sample(p, x);
  return reconstruct(p, groups);
}

template <typename Scalar>
MeasurementSet<Scalar> Csrn<Scalar>::sample(const Tensor<Scalar>& x) const {
  const auto p = bind(nullptr);
  MeasurementSet<Scalar> fm{{}, config_.ratio, config_.block};
  for (auto& g : sample(p, Var<Scalar>(x))) fm.groups.push_back(g.value());
  return fm;
}

namespace {

template <typename Scalar>
std::vector<Var<Scalar>> wrap(const std::vector<Tensor<Scalar>>& tensors) {
  std::vector<Var<Scalar>> out;
  for (const auto& t : tensors) out.emplace_back(t);
  return out;
}

}  // namespace

template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> Csrn<Scalar>::initial_reconstruct(
    const MeasurementSet<Scalar>& fm) const {
  const auto groups = wrap(fm.groups);
  auto [xi, fi] = initial_reconstruct(bind(nullptr), groups);
  return {xi.value(), fi.value()};
}

template <typename Scalar>
Tensor<Scalar> Csrn<Scalar>::compress_features(const Tensor<Scalar>& fi) const {
  return compress_features(bind(nullptr), Var<Scalar>(fi)).value();
}

template <typename Scalar>
Tensor<Scalar> Csrn<Scalar>::rrfm_forward(Index rrfm, const Tensor<Scalar>& f) const {
  return rrfm_forward(bind(nullptr), rrfm, Var<Scalar>(f)).value();
}

template <typename Scalar>
Tensor<Scalar> Csrn<Scalar>::extract_features(const Tensor<Scalar>& fc) const {
  return extract_features(bind(nullptr), Var<Scalar>(fc)).value();
}

template <typename Scalar>
Tensor<Scalar> Csrn<Scalar>::fuse_residual(const Tensor<Scalar>& fc,
                                           const Tensor<Scalar>& fh) const {
  return fuse_residual(bind(nullptr), Var<Scalar>(fc), Var<Scalar>(fh)).value();
}

template <typename Scalar>
Reconstruction<Scalar> Csrn<Scalar>::reconstruct(const MeasurementSet<Scalar>& fm) const {
  if (fm.ratio != config_.ratio || fm.block != config_.block) {
    throw ConfigMismatchError("measurement set (ratio " + fm.ratio.str() + ", block " +
                              std::to_string(fm.block) + ") does not match model (ratio " +
                              config_.ratio.str() + ", block " + std::to_string(config_.block) +
                              ")");
  }
  const auto groups = wrap(fm.groups);
  const auto out = reconstruct(bind(nullptr), groups);
  return {out.initial.value(), out.final.value()};
}

template <typename Scalar>
Reconstruction<Scalar> Csrn<Scalar>::forward(const Tensor<Scalar>& x) const {
  const auto out = forward(bind(nullptr), Var<Scalar>(x));
  return {out.initial.value(), out.final.value()};
}

template <typename Scalar>
Index Csrn<Scalar>::residual_activation_elements(Index height, Index width) const {
  const Index m = config_.filters;
  const Index full = height * width;
  const Index inner = config_.use_fcm ? full / 4 : full;
  const Index map = m * inner;
  Index total = 2 * map;  // FCM conv + ReLU
  // Per residual block: conv1, ReLU, conv2, skip add.
  for (Index j = 0; j < config_.rrfm_count; ++j) {
    if (config_.use_rrfm) {
      total += config_.recurrences * 4 * map + config_.recurrences * map + map;
    } else {
      total += 4 * map;
    }
  }
  total += map;      // F_c + F_h
  total += 2 * map;  // FFM conv + ReLU
  if (config_.use_fcm) total += map;  // pixel shuffle output
  total += full;     // x_r
  return total;
}

template class BoundParams<float>;
template class BoundParams<double>;
template class Csrn<float>;
template class Csrn<double>;

}  // namespace csrn
