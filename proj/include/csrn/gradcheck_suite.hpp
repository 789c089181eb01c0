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

#include "csrn/autodiff.hpp"
#include "csrn/config.hpp"

namespace csrn {

struct GradCheckCase {
  std::string name;
  GradCheckReport report;
};

/// Toy architecture used for the end-to-end check: B=4, m=4, N=1, T=2, r=0.5, 8x8 input.
CsrnConfig gradcheck_toy_config();

/// Central-difference checks of every differentiable layer op (tolerance 1e-5) and the
/// end-to-end toy model loss w.r.t. all of its parameters (tolerance 1e-4), ε = 1e-4,
/// double precision.
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed = 7);

/// Layer cases only.
std::vector<GradCheckCase> layer_gradchecks(std::uint64_t seed = 7);

/// End-to-end case only.
GradCheckCase end_to_end_gradcheck(std::uint64_t seed = 7);

}  // namespace csrn
