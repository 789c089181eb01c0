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

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "csrn/image.hpp"
#include "csrn/tensor.hpp"

namespace csrn {

/// Luminance convention for RGB input.
enum class LumaRange {
  studio,  // BT.601 16..235
  full,    // BT.601 weights, 0..255
};

/// Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255 for studio swing.
/// Single-channel input is returned unchanged.
ImageBuffer rgb_to_luma(const ImageBuffer& img, LumaRange range = LumaRange::studio);

using Patch = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// k-th element of the dihedral group D4: 0 identity, 1..3 counter-clockwise rotations by
/// 90/180/270 degrees, 4 horizontal flip, 5..7 horizontal flip followed by those rotations.
Patch augment(const Patch& patch, int k);

/// Group inverse of augmentation k.
int augment_inverse(int k);

struct PatchOrigin {
  std::size_t crop = 0;  // index into PatchSet::crops
  std::size_t image = 0;
  Index y = 0;
  Index x = 0;
  int augmentation = 0;
};

/// Square single-channel crops plus the (crop, augmentation) entries that form the set.
/// Augmented patches are materialized on demand.
struct PatchSet {
  Index size = 96;
  std::vector<Patch> crops;
  std::vector<PatchOrigin> entries;

  std::size_t count() const { return entries.size(); }
  Patch patch(std::size_t i) const;
  void append(const PatchSet& other);
};

struct CropOptions {
  Index size = 96;
  Index stride = 96;
  bool augment = false;  // expand every crop into its eight dihedral variants
};

/// Grid crops with remainders discarded. An image smaller than the crop size yields no
/// patches (the caller is warned through the return value being empty).
PatchSet crop_patches(const ImageBuffer& gray, const CropOptions& options = {},
                      std::size_t image_id = 0);

/// Loads every image in `dir`, converts to luminance, crops and (optionally) augments.
PatchSet load_patch_set(const std::filesystem::path& dir, const CropOptions& options,
                        LumaRange range = LumaRange::studio);

/// Deterministic epoch-seeded permutation split into full batches; the remainder is dropped.
std::vector<std::vector<std::size_t>> batch_order(std::size_t count, std::size_t batch_size,
                                                  std::uint64_t seed, std::uint64_t epoch);

/// Stacks the listed patches into a (batch, 1, size, size) tensor.
Tensor<float> make_batch(const PatchSet& patches, std::span<const std::size_t> indices);

/// All batches of one epoch, materialized.
std::vector<Tensor<float>> batches(const PatchSet& patches, std::size_t batch_size,
                                   std::uint64_t seed, std::uint64_t epoch);

}  // namespace csrn
