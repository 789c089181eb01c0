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

#include "csrn/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace csrn {

namespace {

template <typename Scalar>
using NodePtr = std::shared_ptr<detail::Node<Scalar>>;

template <typename Scalar>
Tape<Scalar>* common_tape(std::initializer_list<const Var<Scalar>*> vars) {
  Tape<Scalar>* tape = nullptr;
  for (const auto* v : vars) {
    if (v == nullptr || v->tape() == nullptr) continue;
    if (tape != nullptr && tape != v->tape()) {
      throw ConsistencyError("operation mixes values from different tapes");
    }
    tape = v->tape();
  }
  return tape;
}

template <typename Scalar>
bool any_requires_grad(std::initializer_list<const Var<Scalar>*> vars) {
  return std::any_of(vars.begin(), vars.end(),
                     [](const Var<Scalar>* v) { return v != nullptr && v->requires_grad(); });
}

template <typename Scalar, typename Backward>
Var<Scalar> emit(Tensor<Scalar> value, std::initializer_list<const Var<Scalar>*> inputs,
                 Backward&& backward) {
  Tape<Scalar>* tape = common_tape(inputs);
  if (tape == nullptr || !any_requires_grad(inputs)) return Var<Scalar>(std::move(value));
  return tape->record(std::move(value), true, std::forward<Backward>(backward));
}

}  // namespace

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& input, const Var<Scalar>& weight, const Var<Scalar>* bias,
                   const ConvSpec& spec) {
  auto out = conv2d(input.value(), weight.value(), bias ? &bias->value() : nullptr, spec);
  NodePtr<Scalar> in = input.node();
  NodePtr<Scalar> w = weight.node();
  NodePtr<Scalar> b = bias ? bias->node() : nullptr;
  return emit<Scalar>(std::move(out), {&input, &weight, bias},
                      [in, w, b, spec](const Tensor<Scalar>& g) {
                        conv2d_backward(in->value, w->value, g, spec,
                                        in->requires_grad ? &in->grad_buffer() : nullptr,
                                        w->requires_grad ? &w->grad_buffer() : nullptr,
                                        (b && b->requires_grad) ? &b->grad_buffer() : nullptr);
                      });
}

template <typename Scalar>
Var<Scalar> pixel_shuffle(const Var<Scalar>& input, Index upscale) {
  NodePtr<Scalar> in = input.node();
  return emit<Scalar>(pixel_shuffle(input.value(), upscale), {&input},
                      [in, upscale](const Tensor<Scalar>& g) {
                        in->accumulate(pixel_unshuffle(g, upscale));
                      });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& input) {
  NodePtr<Scalar> in = input.node();
  return emit<Scalar>(relu(input.value()), {&input}, [in](const Tensor<Scalar>& g) {
    in->accumulate(Tensor<Scalar>(
        g.shape(), (in->value.array() > Scalar(0)).select(g.array(), Scalar(0))));
  });
}

template <typename Scalar>
Var<Scalar> concat_channels(std::span<const Var<Scalar>> inputs) {
  std::vector<const Tensor<Scalar>*> values;
  std::vector<NodePtr<Scalar>> nodes;
  Tape<Scalar>* tape = nullptr;
  bool requires_grad = false;
  for (const auto& v : inputs) {
    values.push_back(&v.value());
    nodes.push_back(v.node());
    if (v.tape() != nullptr) {
      if (tape != nullptr && tape != v.tape()) {
        throw ConsistencyError("concat_channels mixes values from different tapes");
      }
      tape = v.tape();
    }
    requires_grad = requires_grad || v.requires_grad();
  }
  auto out = concat_channels<Scalar>(std::span<const Tensor<Scalar>* const>(values));
  if (tape == nullptr || !requires_grad) return Var<Scalar>(std::move(out));
  return tape->record(std::move(out), true, [nodes](const Tensor<Scalar>& g) {
    const Shape& s = g.shape();
    const Index plane = s.plane();
    Index channel = 0;
    for (const auto& node : nodes) {
      const Shape part = node->value.shape();
      if (node->requires_grad) {
        Tensor<Scalar>& dst = node->grad_buffer();
        for (Index n = 0; n < s.n; ++n) {
          const Scalar* src = g.data() + (n * s.c + channel) * plane;
          Scalar* d = dst.data() + n * part.c * plane;
          for (Index i = 0; i < part.c * plane; ++i) d[i] += src[i];
        }
      }
      channel += part.c;
    }
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  NodePtr<Scalar> na = a.node();
  NodePtr<Scalar> nb = b.node();
  return emit<Scalar>(add(a.value(), b.value()), {&a, &b}, [na, nb](const Tensor<Scalar>& g) {
    na->accumulate(g);
    nb->accumulate(g);
  });
}

template <typename Scalar>
Var<Scalar> sse(const Var<Scalar>& a, const Var<Scalar>& b) {
  NodePtr<Scalar> na = a.node();
  NodePtr<Scalar> nb = b.node();
  return emit<Scalar>(Tensor<Scalar>::scalar(sse(a.value(), b.value())), {&a, &b},
                      [na, nb](const Tensor<Scalar>& g) {
                        const Scalar k = Scalar(2) * g.item();
                        const Tensor<Scalar> diff(na->value.shape(),
                                                  k * (na->value.array() - nb->value.array()));
                        na->accumulate(diff);
                        if (nb->requires_grad) nb->accumulate(Tensor<Scalar>(diff.shape(), -diff.array()));
                      });
}

template <typename Scalar>
Var<Scalar> mse(const Var<Scalar>& a, const Var<Scalar>& b) {
  return scale(sse(a, b), Scalar(1) / static_cast<Scalar>(a.value().size()));
}

template <typename Scalar>
Var<Scalar> weighted_sum(const Var<Scalar>& a, const Tensor<Scalar>& weights) {
  require_same_shape(a.shape(), weights.shape(), "weighted_sum");
  NodePtr<Scalar> na = a.node();
  return emit<Scalar>(Tensor<Scalar>::scalar((a.value().array() * weights.array()).sum()), {&a},
                      [na, weights](const Tensor<Scalar>& g) {
                        na->accumulate(Tensor<Scalar>(weights.shape(), g.item() * weights.array()));
                      });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor) {
  NodePtr<Scalar> na = a.node();
  return emit<Scalar>(Tensor<Scalar>(a.shape(), a.value().array() * factor), {&a},
                      [na, factor](const Tensor<Scalar>& g) {
                        na->accumulate(Tensor<Scalar>(g.shape(), g.array() * factor));
                      });
}

GradCheckReport grad_check(const GradCheckFn& fn, const std::vector<TensorD>& inputs,
                           double epsilon, double tolerance, double gradient_scale) {
  if (!(epsilon > 0.0)) throw ConfigError("grad_check: epsilon must be positive");
  std::vector<TensorD> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& t : inputs) vars.push_back(tape.parameter(t));
    const auto loss = fn(tape, vars);
    const auto grads = tape.backward(loss);
    for (const auto& v : vars) analytic.push_back(grads.at(v));
  }

  auto evaluate = [&](const std::vector<TensorD>& point) {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& t : point) vars.push_back(tape.parameter(t));
    return fn(tape, vars).value().item();
  };

  GradCheckReport report;
  report.tolerance = tolerance;
  std::vector<TensorD> point = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Index k = 0; k < inputs[i].size(); ++k) {
      const double original = point[i].data()[k];
      point[i].data()[k] = original + epsilon;
      const double plus = evaluate(point);
      point[i].data()[k] = original - epsilon;
      const double minus = evaluate(point);
      point[i].data()[k] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double tape_grad = gradient_scale * analytic[i].data()[k];
      const double denom = std::max({std::abs(numeric), std::abs(tape_grad), 1e-6});
      report.max_relative_error =
          std::max(report.max_relative_error, std::abs(numeric - tape_grad) / denom);
      ++report.checked;
    }
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

#define CSRN_INSTANTIATE_AD(T)                                                                 \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>*, const ConvSpec&);      \
  template Var<T> pixel_shuffle(const Var<T>&, Index);                                       \
  template Var<T> relu(const Var<T>&);                                                       \
  template Var<T> concat_channels(std::span<const Var<T>>);                                  \
  template Var<T> add(const Var<T>&, const Var<T>&);                                         \
  template Var<T> mse(const Var<T>&, const Var<T>&);                                         \
  template Var<T> sse(const Var<T>&, const Var<T>&);                                         \
  template Var<T> weighted_sum(const Var<T>&, const Tensor<T>&);                             \
  template Var<T> scale(const Var<T>&, T);

CSRN_INSTANTIATE_AD(float)
CSRN_INSTANTIATE_AD(double)

#undef CSRN_INSTANTIATE_AD

}  // namespace csrn
