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
#include <string>
#include <vector>

#include "csrn/tensor.hpp"

namespace csrn {

/// Sample ratio held as a reduced fraction so headers compare exactly.
struct SampleRatio {
  std::uint16_t num = 1;
  std::uint16_t den = 10;

  static SampleRatio from_fraction(std::uint32_t num, std::uint32_t den);
  /// Parses a decimal such as "0.05" or a fraction such as "1/20".
  static SampleRatio parse(const std::string& text);

  double value() const { return static_cast<double>(num) / den; }
  bool operator==(const SampleRatio&) const = default;
  std::string str() const;
};

/// The seven ratios the model was designed for.
const std::vector<SampleRatio>& supported_ratios();
bool is_supported_ratio(const SampleRatio& r);

/// Ablation switches. The default is the full model.
enum class Variant { progressive, simple_init, rb_only, no_fcm };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct CsrnConfig {
  SampleRatio ratio;
  Index block = 32;
  Index filters = 32;
  Index rrfm_count = 5;
  Index recurrences = 3;
  bool progressive_init = true;
  bool use_rrfm = true;
  bool use_fcm = true;

  static CsrnConfig with_variant(SampleRatio ratio, Variant v);

  /// Channels per measurement group: one group of ⌊r·B²⌋ below r = 0.1, otherwise
  /// round(10·r) groups of ⌊0.1·B²⌋.
  std::vector<Index> measurement_plan() const;

  /// Basic recovery block pixel-shuffle factors (4 and 8 at B = 32); their product is B.
  Index inner_upscale() const;
  Index outer_upscale() const;

  /// Channels of the initial feature map F_i handed to the residual network.
  Index initial_feature_channels() const;

  /// Throws ConfigError when the configuration cannot build a model.
  void validate() const;

  bool operator==(const CsrnConfig&) const = default;
  std::string str() const;
};

}  // namespace csrn
