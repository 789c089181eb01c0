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

#include <gtest/gtest.h>

#include <array>
#include <random>

#include "csrn/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace csrn {
namespace {

using csrn::testing::conv_layer;
using csrn::testing::randomize_biases;

CsrnConfig at_ratio(std::uint32_t num, std::uint32_t den) {
  CsrnConfig c;
  c.ratio = SampleRatio::from_fraction(num, den);
  return c;
}

TEST(Config, MeasurementPlan) {
  EXPECT_EQ(at_ratio(1, 100).measurement_plan(), std::vector<Index>{10});
  EXPECT_EQ(at_ratio(1, 20).measurement_plan(), std::vector<Index>{51});
  EXPECT_EQ(at_ratio(1, 10).measurement_plan(), std::vector<Index>{102});
  EXPECT_EQ(at_ratio(1, 5).measurement_plan(), (std::vector<Index>{102, 102}));
  EXPECT_EQ(at_ratio(1, 2).measurement_plan(), std::vector<Index>(5, 102));
}

TEST(Config, RatioParsing) {
  EXPECT_EQ(SampleRatio::parse("0.05"), SampleRatio::from_fraction(1, 20));
  EXPECT_EQ(SampleRatio::parse("1/10"), SampleRatio::from_fraction(1, 10));
  EXPECT_THROW(SampleRatio::parse("abc"), ConfigError);
  EXPECT_EQ(supported_ratios().size(), 7u);
  EXPECT_FALSE(is_supported_ratio(SampleRatio::parse("0.15")));
}

TEST(Config, InvalidConfigurations) {
  EXPECT_THROW(at_ratio(3, 20).validate(), ConfigError);  // 0.15 has no group plan
  auto c = at_ratio(1, 10);
  c.block = 2;  // ⌊0.1·4⌋ = 0 channels
  EXPECT_THROW(c.validate(), ConfigError);
  c = at_ratio(1, 10);
  c.filters = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = at_ratio(1, 10);
  c.recurrences = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Build, SamplingLayers) {
  const auto m2 = Csrn<float>::build(at_ratio(1, 5), 1);
  int count = 0;
  for (const auto& l : m2.layers()) {
    if (l.partition != Partition::sampling) continue;
    ++count;
    EXPECT_EQ(l.conv.out_channels, 102);
    EXPECT_EQ(l.conv.kernel, 32);
    EXPECT_EQ(l.conv.stride, 32);
    EXPECT_FALSE(l.conv.bias);
  }
  EXPECT_EQ(count, 2);
  const auto m1 = Csrn<float>::build(at_ratio(1, 100), 1);
  EXPECT_EQ(m1.layers().front().conv.out_channels, 10);
  EXPECT_EQ(m1.count_params().sampling, 10 * 1024);
}

TEST(Build, GoldenManifestAtTenPercent) {
  struct Row {
    const char* name;
    Partition part;
    Index in, out, k, s, p;
    bool bias;
  };
  const auto S = Partition::sampling, I = Partition::initial, R = Partition::residual;
  std::vector<Row> golden = {
      {"sampling.g0", S, 1, 102, 32, 32, 0, false},
      {"initial.block0.expand", I, 102, 256, 1, 1, 0, true},
      {"initial.block0.inter", I, 16, 16, 3, 1, 1, true},
      {"initial.block0.lift", I, 16, 512, 1, 1, 0, true},
      {"initial.head", I, 8, 1, 3, 1, 1, true},
      {"residual.fcm", R, 8, 32, 2, 2, 0, true},
  };
  std::vector<std::string> rrfm_names;
  for (int j = 0; j < 5; ++j)
    for (const char* suffix : {".conv1", ".conv2", ".fuse"})
      rrfm_names.push_back("residual.rrfm" + std::to_string(j) + suffix);
  for (std::size_t i = 0; i < rrfm_names.size(); ++i) {
    const bool fuse = i % 3 == 2;
    golden.push_back({rrfm_names[i].c_str(), R, fuse ? 96 : 32, 32, fuse ? 1 : 3, 1, fuse ? 0 : 1,
                      true});
  }
  golden.push_back({"residual.ffm.conv", R, 32, 32, 3, 1, 1, true});
  golden.push_back({"residual.ffm.out", R, 8, 1, 3, 1, 1, true});

  const auto layers = layer_manifest(at_ratio(1, 10));
  ASSERT_EQ(layers.size(), golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) {
    const auto& g = golden[i];
    const auto& l = layers[i];
    EXPECT_EQ(l.name, g.name);
    EXPECT_EQ(l.partition, g.part) << g.name;
    EXPECT_EQ(l.in_channels, g.in) << g.name;
    EXPECT_EQ(l.conv.out_channels, g.out) << g.name;
    EXPECT_EQ(l.conv.kernel, g.k) << g.name;
    EXPECT_EQ(l.conv.stride, g.s) << g.name;
    EXPECT_EQ(l.conv.padding, g.p) << g.name;
    EXPECT_EQ(l.conv.bias, g.bias) << g.name;
  }
}

TEST(Build, FusionWidths) {
  const auto l3 = layer_manifest(at_ratio(3, 10));
  auto find = [&](const std::string& n) {
    for (const auto& l : l3)
      if (l.name == n) return l;
    throw std::runtime_error(n);
  };
  EXPECT_EQ(find("initial.fuse1").in_channels, 16);
  EXPECT_EQ(find("initial.fuse2").in_channels, 24);
  EXPECT_EQ(find("initial.fuse2").conv.out_channels, 16);
}

TEST(Sample, Geometry) {
  const auto model = Csrn<float>::build(at_ratio(1, 10), 1);
  std::mt19937_64 rng(1);
  const auto fm = model.sample(oracle::random_tensor<float>(Shape{1, 1, 96, 96}, rng, 0, 1));
  ASSERT_EQ(fm.groups.size(), 1u);
  EXPECT_EQ(fm.groups[0].shape(), (Shape{1, 102, 3, 3}));
  const auto zero = model.sample(TensorF(Shape{1, 1, 96, 96}));
  EXPECT_EQ(zero.groups[0].array().abs().maxCoeff(), 0.0f);
}

TEST(Sample, MatchesBlockMatrixOracle) {
  CsrnConfig c = at_ratio(1, 2);
  c.block = 4;
  c.filters = 4;
  const auto model = Csrn<double>::build(c, 9);
  std::mt19937_64 rng(2);
  const auto x = oracle::random_tensor<double>(Shape{1, 1, 8, 8}, rng, 0, 1);
  const auto fm = model.sample(x);
  ASSERT_EQ(fm.groups.size(), 5u);
  for (std::size_t k = 0; k < fm.groups.size(); ++k) {
    const auto want =
        oracle::block_sample(x, model.params().at("sampling.g" + std::to_string(k) + ".weight"));
    ASSERT_EQ(fm.groups[k].shape(), want.shape());
    EXPECT_LT((fm.groups[k].array() - want.array()).abs().maxCoeff(), 1e-10);
  }
}

TEST(InitialReconstruct, FeatureChannels) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_tensor<float>(Shape{1, 1, 96, 96}, rng, 0, 1);
  for (auto [num, den, ch] : {std::array<int, 3>{1, 100, 8}, {1, 10, 8}, {1, 5, 16}, {3, 10, 16}}) {
    const auto model = Csrn<float>::build(at_ratio(num, den), 1);
    const auto [xi, fi] = model.initial_reconstruct(model.sample(x));
    EXPECT_EQ(fi.shape(), (Shape{1, ch, 96, 96})) << num << "/" << den;
    EXPECT_EQ(xi.shape(), (Shape{1, 1, 96, 96}));
  }
}

TEST(InitialReconstruct, SimpleVariantShape) {
  const auto model =
      Csrn<float>::build(CsrnConfig::with_variant(SampleRatio::from_fraction(1, 10),
                                                  Variant::simple_init), 1);
  std::mt19937_64 rng(4);
  const auto out = model.forward(oracle::random_tensor<float>(Shape{1, 1, 96, 96}, rng, 0, 1));
  EXPECT_EQ(out.initial.shape(), (Shape{1, 1, 96, 96}));
  EXPECT_EQ(out.final.shape(), (Shape{1, 1, 96, 96}));
}

TEST(CompressFeatures, Shapes) {
  std::mt19937_64 rng(5);
  const auto fi = oracle::random_tensor<float>(Shape{1, 8, 96, 96}, rng);
  const auto model = Csrn<float>::build(at_ratio(1, 10), 1);
  EXPECT_EQ(model.compress_features(fi).shape(), (Shape{1, 32, 48, 48}));
  EXPECT_EQ(model.compress_features(TensorF(fi.shape())).array().abs().maxCoeff(), 0.0f);
  const auto o = Csrn<float>::build(
      CsrnConfig::with_variant(SampleRatio::from_fraction(1, 10), Variant::no_fcm), 1);
  EXPECT_EQ(o.compress_features(fi).shape(), (Shape{1, 32, 96, 96}));
}

TEST(Rrfm, UnrolledChainIsBitExact) {
  std::mt19937_64 rng(6);
  for (Index t : {1, 2, 3, 5}) {
    CsrnConfig c = at_ratio(1, 10);
    c.block = 8;
    c.filters = 8;
    c.rrfm_count = 1;
    c.recurrences = t;
    auto model = Csrn<float>::build(c, 10 + t);
    randomize_biases(model.params(), t);
    const auto f = oracle::random_tensor<float>(Shape{2, 8, 6, 6}, rng);

    std::vector<TensorF> states;
    TensorF z = f;
    for (Index i = 0; i < t; ++i) {
      const auto h = relu(conv_layer(model, "residual.rrfm0.conv1", z));
      z = add(z, conv_layer(model, "residual.rrfm0.conv2", h));
      states.push_back(z);
    }
    std::vector<const TensorF*> ptrs;
    for (const auto& s : states) ptrs.push_back(&s);
    const auto want = conv_layer(model, "residual.rrfm0.fuse", concat_channels<float>(ptrs));
    EXPECT_TRUE(model.rrfm_forward(0, f).identical(want)) << "T=" << t;
  }
}

TEST(Rrfm, FuseReadsAllStates) {
  for (const auto& l : layer_manifest(at_ratio(1, 10)))
    if (l.name == "residual.rrfm0.fuse") {
      EXPECT_EQ(l.in_channels, 96);
    }
}

TEST(ExtractFeatures, EmptyAndDistinct) {
  CsrnConfig c = at_ratio(1, 10);
  c.rrfm_count = 0;
  const auto m0 = Csrn<float>::build(c, 1);
  std::mt19937_64 rng(7);
  const auto fc = oracle::random_tensor<float>(Shape{1, 32, 8, 8}, rng);
  EXPECT_TRUE(m0.extract_features(fc).identical(fc));

  const auto m5 = Csrn<float>::build(at_ratio(1, 10), 1);
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      EXPECT_FALSE(m5.params()
                       .at("residual.rrfm" + std::to_string(i) + ".conv1.weight")
                       .identical(m5.params().at("residual.rrfm" + std::to_string(j) +
                                                 ".conv1.weight")));
}

TEST(ExtractFeatures, ResidualBlockAblation) {
  const auto cfg = CsrnConfig::with_variant(SampleRatio::from_fraction(1, 10), Variant::rb_only);
  auto model = Csrn<float>::build(cfg, 2);
  randomize_biases(model.params(), 3);
  for (const auto& l : model.layers()) EXPECT_FALSE(l.name.ends_with(".fuse")) << l.name;
  std::mt19937_64 rng(8);
  const auto f = oracle::random_tensor<float>(Shape{1, 32, 6, 6}, rng);
  const auto h = relu(conv_layer(model, "residual.rrfm1.conv1", f));
  const auto want = add(f, conv_layer(model, "residual.rrfm1.conv2", h));
  EXPECT_TRUE(model.rrfm_forward(1, f).identical(want));
}

TEST(FuseResidual, ManualCompositionIsBitExact) {
  auto model = Csrn<float>::build(at_ratio(1, 10), 3);
  randomize_biases(model.params(), 4);
  std::mt19937_64 rng(9);
  const auto fc = oracle::random_tensor<float>(Shape{1, 32, 48, 48}, rng);
  const auto fh = oracle::random_tensor<float>(Shape{1, 32, 48, 48}, rng);
  auto manual = [&](const TensorF& h) {
    const auto a = relu(conv_layer(model, "residual.ffm.conv", add(fc, h)));
    return conv_layer(model, "residual.ffm.out", pixel_shuffle(a, 2));
  };
  const auto xr = model.fuse_residual(fc, fh);
  EXPECT_EQ(xr.shape(), (Shape{1, 1, 96, 96}));
  EXPECT_TRUE(xr.identical(manual(fh)));
  EXPECT_TRUE(model.fuse_residual(fc, TensorF(fc.shape())).identical(manual(TensorF(fc.shape()))));
}

TEST(Forward, ShapesAndFinitenessAtAllRatios) {
  std::mt19937_64 rng(10);
  const auto x = oracle::random_tensor<float>(Shape{1, 1, 96, 96}, rng, 0, 1);
  for (const auto& r : supported_ratios()) {
    CsrnConfig c;
    c.ratio = r;
    const auto out = Csrn<float>::build(c, 1).forward(x);
    EXPECT_EQ(out.initial.shape(), x.shape()) << r.str();
    EXPECT_EQ(out.final.shape(), x.shape()) << r.str();
    EXPECT_TRUE(out.initial.all_finite() && out.final.all_finite()) << r.str();
  }
}

TEST(Forward, ZeroResidualLeavesInitial) {
  auto model = Csrn<float>::build(at_ratio(1, 5), 4);
  randomize_biases(model.params(), 5);
  model.params().at("residual.ffm.out.weight").array().setZero();
  model.params().at("residual.ffm.out.bias").array().setZero();
  std::mt19937_64 rng(11);
  const auto out = model.forward(oracle::random_tensor<float>(Shape{1, 1, 64, 96}, rng, 0, 1));
  EXPECT_TRUE(out.final.identical(out.initial));
}

TEST(Forward, RejectsNonTilingInput) {
  const auto model = Csrn<float>::build(at_ratio(1, 10), 1);
  EXPECT_THROW(model.forward(TensorF(Shape{1, 1, 100, 96})), GeometryError);
}

TEST(CountParams, MatchesClosedForm) {
  for (const auto& r : supported_ratios()) {
    for (Variant v : {Variant::progressive, Variant::simple_init, Variant::rb_only,
                      Variant::no_fcm}) {
      const auto cfg = CsrnConfig::with_variant(r, v);
      const auto got = Csrn<float>::build(cfg, 1).count_params();
      const auto want = oracle::count_params(r.num, r.den, 32, 32, 5, 3, cfg.progressive_init,
                                             cfg.use_rrfm, cfg.use_fcm);
      EXPECT_EQ(got.sampling, want.sampling) << r.str() << " " << to_string(v);
      EXPECT_EQ(got.initial, want.initial) << r.str() << " " << to_string(v);
      EXPECT_EQ(got.interface, want.interface) << r.str() << " " << to_string(v);
      EXPECT_EQ(got.residual, want.residual) << r.str() << " " << to_string(v);
    }
  }
}

TEST(CountParams, TableValues) {
  auto counts = [](std::uint32_t n, std::uint32_t d, Variant v = Variant::progressive) {
    return Csrn<float>::build(CsrnConfig::with_variant(SampleRatio::from_fraction(n, d), v), 1)
        .count_params();
  };
  EXPECT_EQ(counts(1, 100).reconstruction_total(), 132290);
  EXPECT_EQ(counts(1, 10).initial, 37465);
  EXPECT_EQ(counts(1, 10).residual, 118377);
  EXPECT_EQ(counts(1, 10).reconstruction_total(), 155842);
  EXPECT_NEAR(counts(1, 2, Variant::simple_init).initial, 522200, 0.001 * 522200);
  EXPECT_EQ(counts(1, 10, Variant::simple_init).initial, 104448);
  EXPECT_EQ(counts(1, 100, Variant::simple_init).initial, 10240);
}

TEST(CountParams, AblationDeltas) {
  const auto r = SampleRatio::from_fraction(1, 10);
  const auto full = Csrn<float>::build(CsrnConfig::with_variant(r, Variant::progressive), 1);
  const auto rb = Csrn<float>::build(CsrnConfig::with_variant(r, Variant::rb_only), 1);
  EXPECT_EQ(full.count_params().residual - rb.count_params().residual, 5 * (3 * 32 * 32 + 32));

  const auto o = Csrn<float>::build(CsrnConfig::with_variant(r, Variant::no_fcm), 1);
  const double ratio = static_cast<double>(o.residual_activation_elements(96, 96)) /
                       static_cast<double>(full.residual_activation_elements(96, 96));
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

}  // namespace
}  // namespace csrn
