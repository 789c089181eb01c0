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

#include "csrn/config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace csrn {

SampleRatio SampleRatio::from_fraction(std::uint32_t num, std::uint32_t den) {
  if (num == 0 || den == 0 || num > den) {
    throw ConfigError("sample ratio must lie in (0, 1], got " + std::to_string(num) + "/" +
                      std::to_string(den));
  }
  const auto g = std::gcd(num, den);
  num /= g;
  den /= g;
  if (den > 0xFFFF) throw ConfigError("sample ratio denominator too large");
  return {static_cast<std::uint16_t>(num), static_cast<std::uint16_t>(den)};
}

SampleRatio SampleRatio::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      return from_fraction(static_cast<std::uint32_t>(std::stoul(text.substr(0, slash))),
                           static_cast<std::uint32_t>(std::stoul(text.substr(slash + 1))));
    }
    // Decimal: read digits exactly instead of going through a double.
    const auto dot = text.find('.');
    std::string whole = text.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (frac.size() > 4 ||
        !std::all_of(whole.begin(), whole.end(), ::isdigit) ||
        !std::all_of(frac.begin(), frac.end(), ::isdigit)) {
      throw ConfigError("cannot parse sample ratio '" + text + "'");
    }
    std::uint32_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::uint32_t num =
        static_cast<std::uint32_t>(std::stoul(whole)) * den +
        (frac.empty() ? 0u : static_cast<std::uint32_t>(std::stoul(frac)));
    return from_fraction(num, den);
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse sample ratio '" + text + "'");
  }
}

std::string SampleRatio::str() const {
  std::ostringstream os;
  os << value();
  return os.str();
}

const std::vector<SampleRatio>& supported_ratios() {
  static const std::vector<SampleRatio> ratios = {
      {1, 100}, {1, 20}, {1, 10}, {1, 5}, {3, 10}, {2, 5}, {1, 2}};
  return ratios;
}

bool is_supported_ratio(const SampleRatio& r) {
  const auto& all = supported_ratios();
  return std::find(all.begin(), all.end(), r) != all.end();
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::progressive: return "progressive";
    case Variant::simple_init: return "simple";
    case Variant::rb_only: return "rb";
    case Variant::no_fcm: return "no-fcm";
  }
  return "progressive";
}

Variant parse_variant(const std::string& text) {
  if (text == "progressive") return Variant::progressive;
  if (text == "simple" || text == "simple_init") return Variant::simple_init;
  if (text == "rb" || text == "rb_only") return Variant::rb_only;
  if (text == "no-fcm" || text == "no_fcm") return Variant::no_fcm;
  throw ConfigError("unknown variant '" + text + "' (expected progressive|simple|rb|no-fcm)");
}

CsrnConfig CsrnConfig::with_variant(SampleRatio ratio, Variant v) {
  CsrnConfig c;
  c.ratio = ratio;
  c.progressive_init = v != Variant::simple_init;
  c.use_rrfm = v != Variant::rb_only;
  c.use_fcm = v != Variant::no_fcm;
  return c;
}

std::vector<Index> CsrnConfig::measurement_plan() const {
  const Index area = block * block;
  // r < 1/10  <=>  10·num < den
  if (10 * static_cast<Index>(ratio.num) < ratio.den) {
    return {area * ratio.num / ratio.den};
  }
  const Index tenths = 10 * static_cast<Index>(ratio.num);
  const Index groups = (tenths + ratio.den / 2) / ratio.den;
  return std::vector<Index>(static_cast<std::size_t>(groups), area / 10);
}

Index CsrnConfig::inner_upscale() const { return std::max<Index>(1, block / 8); }

Index CsrnConfig::outer_upscale() const { return block / inner_upscale(); }

Index CsrnConfig::initial_feature_channels() const {
  if (!progressive_init) return filters / 4;
  return measurement_plan().size() > 1 ? filters / 2 : filters / 4;
}

void CsrnConfig::validate() const {
  if (ratio.num == 0 || ratio.den == 0 || ratio.num > ratio.den) {
    throw ConfigError("sample ratio must lie in (0, 1]");
  }
  if (block < 2 || (block & (block - 1)) != 0) {
    throw ConfigError("block size must be a power of two >= 2, got " + std::to_string(block));
  }
  if (filters < 4 || filters % 4 != 0) {
    throw ConfigError("filter count m must be a positive multiple of 4, got " +
                      std::to_string(filters));
  }
  if (rrfm_count < 0) throw ConfigError("RRFM count must be >= 0");
  if (recurrences < 1) throw ConfigError("recurrence count must be >= 1");
  if (10 * static_cast<Index>(ratio.num) >= ratio.den &&
      (10 * static_cast<Index>(ratio.num)) % ratio.den != 0) {
    throw ConfigError("sample ratio " + ratio.str() +
                      " >= 0.1 must be a multiple of 0.1: measurements are grouped in slices of "
                      "0.1·B² channels");
  }
  for (Index c : measurement_plan()) {
    if (c < 1) {
      throw ConfigError("sample ratio " + ratio.str() + " with block " + std::to_string(block) +
                        " yields an empty measurement group");
    }
  }
}

std::string CsrnConfig::str() const {
  std::ostringstream os;
  os << "ratio=" << ratio.str() << " block=" << block << " filters=" << filters
     << " rrfm=" << rrfm_count << " recurrences=" << recurrences
     << " progressive_init=" << progressive_init << " use_rrfm=" << use_rrfm
     << " use_fcm=" << use_fcm;
  return os.str();
}

}  // namespace csrn
