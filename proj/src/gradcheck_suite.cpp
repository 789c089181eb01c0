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

#include "csrn/gradcheck_suite.hpp"

#include <random>

#include "csrn/metrics.hpp"
#include "csrn/model.hpp"
#include "csrn/optimizer.hpp"

namespace csrn {

namespace {

constexpr double kEpsilon = 1e-4;
constexpr double kLayerTolerance = 1e-5;
constexpr double kModelTolerance = 1e-4;

struct Generator {
  std::mt19937_64 rng;
  explicit Generator(std::uint64_t seed) : rng(seed) {}

  TensorD uniform(const Shape& s, double lo = -1.0, double hi = 1.0) {
    TensorD t(s);
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = lo + (hi - lo) * unit_uniform(rng());
    return t;
  }

  // Values bounded away from zero so a finite-difference step never crosses a ReLU kink.
  TensorD away_from_zero(const Shape& s) {
    TensorD t = uniform(s, 0.1, 1.0);
    for (Index i = 0; i < t.size(); ++i) {
      if (rng() & 1) t.data()[i] = -t.data()[i];
    }
    return t;
  }
};

GradCheckCase conv_case(Generator& g, const std::string& name, Shape in, Index out, Index k,
                        Index s, Index p) {
  const ConvSpec spec{out, k, s, p, true};
  const Index ho = spec.output_extent(in.h, "rows");
  const Index wo = spec.output_extent(in.w, "cols");
  const auto proj = g.uniform(Shape{in.n, out, ho, wo});
  auto fn = [spec, proj](Tape<double>&, std::span<const Var<double>> v) {
    return weighted_sum(conv2d(v[0], v[1], &v[2], spec), proj);
  };
  return {name, grad_check(fn,
                           {g.uniform(in), g.uniform(Shape{out, in.c, k, k}),
                            g.uniform(Shape{out, 1, 1, 1})},
                           kEpsilon, kLayerTolerance)};
}

}  // namespace

CsrnConfig gradcheck_toy_config() {
  CsrnConfig c;
  c.ratio = SampleRatio{1, 2};
  c.block = 4;
  c.filters = 4;
  c.rrfm_count = 1;
  c.recurrences = 2;
  return c;
}

std::vector<GradCheckCase> layer_gradchecks(std::uint64_t seed) {
  Generator g(seed);
  std::vector<GradCheckCase> cases;
  cases.push_back(conv_case(g, "conv2d 3x3 stride 1 pad 1", Shape{2, 2, 5, 5}, 3, 3, 1, 1));
  cases.push_back(conv_case(g, "conv2d 2x2 stride 2", Shape{1, 3, 6, 6}, 4, 2, 2, 0));
  cases.push_back(conv_case(g, "conv2d 1x1", Shape{2, 3, 4, 4}, 5, 1, 1, 0));
  cases.push_back(conv_case(g, "conv2d block sampling 4x4 stride 4", Shape{1, 1, 8, 8}, 3, 4, 4, 0));

  {
    const auto proj = g.uniform(Shape{1, 2, 6, 6});
    auto fn = [proj](Tape<double>&, std::span<const Var<double>> v) {
      return weighted_sum(pixel_shuffle(v[0], 3), proj);
    };
    cases.push_back({"pixel_shuffle u=3", grad_check(fn, {g.uniform(Shape{1, 18, 2, 2})}, kEpsilon,
                                                     kLayerTolerance)});
  }
  {
    const auto proj = g.uniform(Shape{2, 3, 4, 4});
    auto fn = [proj](Tape<double>&, std::span<const Var<double>> v) {
      return weighted_sum(relu(v[0]), proj);
    };
    cases.push_back({"relu", grad_check(fn, {g.away_from_zero(Shape{2, 3, 4, 4})}, kEpsilon,
                                        kLayerTolerance)});
  }
  {
    const auto proj = g.uniform(Shape{2, 6, 3, 3});
    auto fn = [proj](Tape<double>&, std::span<const Var<double>> v) {
      return weighted_sum(concat_channels(v), proj);
    };
    cases.push_back({"concat_channels",
                     grad_check(fn,
                                {g.uniform(Shape{2, 1, 3, 3}), g.uniform(Shape{2, 3, 3, 3}),
                                 g.uniform(Shape{2, 2, 3, 3})},
                                kEpsilon, kLayerTolerance)});
  }
  {
    const auto proj = g.uniform(Shape{2, 3, 4, 4});
    auto fn = [proj](Tape<double>&, std::span<const Var<double>> v) {
      return weighted_sum(add(v[0], v[1]), proj);
    };
    cases.push_back({"add", grad_check(fn, {g.uniform(Shape{2, 3, 4, 4}), g.uniform(Shape{2, 3, 4, 4})},
                                       kEpsilon, kLayerTolerance)});
  }
  {
    auto fn = [](Tape<double>&, std::span<const Var<double>> v) { return mse(v[0], v[1]); };
    cases.push_back({"mse", grad_check(fn, {g.uniform(Shape{1, 2, 3, 3}), g.uniform(Shape{1, 2, 3, 3})},
                                       kEpsilon, kLayerTolerance)});
  }
  {
    auto fn = [](Tape<double>&, std::span<const Var<double>> v) {
      return csrn_loss(v[0], v[1], v[2], 2);
    };
    const Shape s{2, 1, 4, 4};
    cases.push_back({"two-term reconstruction loss",
                     grad_check(fn, {g.uniform(s), g.uniform(s), g.uniform(s)}, kEpsilon,
                                kLayerTolerance)});
  }
  return cases;
}

GradCheckCase end_to_end_gradcheck(std::uint64_t seed) {
  const auto config = gradcheck_toy_config();
  const auto model = Csrn<double>::build(config, seed);
  Generator g(seed + 1);
  const auto image = g.uniform(Shape{1, 1, 8, 8}, 0.0, 1.0);

  std::vector<std::string> names;
  std::vector<TensorD> values;
  for (const auto& p : model.params().entries()) {
    names.push_back(p.name);
    // Nonzero biases so every bias path carries signal.
    values.push_back(p.name.ends_with(".bias") ? g.uniform(p.value.shape(), -0.1, 0.1) : p.value);
  }
  auto fn = [&](Tape<double>& tape, std::span<const Var<double>> v) {
    BoundParams<double> bound;
    for (std::size_t i = 0; i < names.size(); ++i) bound.set(names[i], v[i]);
    const auto x = tape.constant(image);
    const auto out = model.forward(bound, x);
    return csrn_loss(x, out.initial, out.final, 1);
  };
  return {"end-to-end toy model (B=4, m=4, N=1, T=2)",
          grad_check(fn, values, kEpsilon, kModelTolerance)};
}

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed) {
  auto cases = layer_gradchecks(seed);
  cases.push_back(end_to_end_gradcheck(seed));
  return cases;
}

}  // namespace csrn
