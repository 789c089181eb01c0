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
#include <filesystem>
#include <span>
#include <vector>

#include "csrn/model.hpp"

namespace csrn {

/// Checkpoint file, all integers little-endian:
///
///   "CSRN"                       4 bytes magic
///   version                      u16 (currently 1)
///   ratio num, den               u16, u16
///   B, m, N, T                   u16 × 4
///   variant flags                u8  (bit 0 progressive_init, bit 1 use_rrfm, bit 2 use_fcm)
///   seed                         u64
///   epoch                        u32
///   validation loss              f64
///   record count                 u32
///   records                      name length u16, UTF-8 name, rank u8, dims u32 × rank,
///                                f32 × Π dims
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  double validation_loss = 0.0;

  bool operator==(const CheckpointMeta&) const = default;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> checkpoint_bytes(const Csrn<float>& model, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  Csrn<float> model;
  CheckpointMeta meta;
};

LoadedCheckpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Csrn<float>& model, const std::filesystem::path& path,
                     const CheckpointMeta& meta);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and rejects a checkpoint whose stored configuration differs from `expected`.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const CsrnConfig& expected);

/// Number of parameter records a checkpoint of this configuration holds.
std::size_t checkpoint_record_count(const CsrnConfig& config);

}  // namespace csrn
