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

#include "csrn/image.hpp"
#include "csrn/model.hpp"

namespace csrn {

/// Measurement file, all integers little-endian:
///
///   "CSMF"            4 bytes magic
///   version           u16 (currently 1)
///   ratio num, den    u16, u16
///   block size B      u16
///   group count K     u16
///   height, width     u32, u32   original image
///   padded h, w       u32, u32   next multiples of B
///   channels_k        K × u16
///   payload           K groups of f32, each (channels_k, H_pad/B, W_pad/B) row-major
struct MeasurementFile {
  static constexpr std::uint16_t kVersion = 1;

  SampleRatio ratio;
  std::uint16_t block = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t padded_height = 0;
  std::uint32_t padded_width = 0;
  std::vector<Tensor<float>> groups;  // each (1, channels_k, H_pad/B, W_pad/B)

  std::vector<std::uint8_t> serialize() const;
  static MeasurementFile parse(std::span<const std::uint8_t> bytes);

  void write(const std::filesystem::path& path) const;
  static MeasurementFile read(const std::filesystem::path& path);

  std::size_t payload_bytes() const;
};

struct PaddedImage {
  ImageBuffer image;
  Index height = 0;  // original extents
  Index width = 0;
};

/// Reflect-pads (no edge duplication) on the right and bottom to multiples of `block`.
PaddedImage pad_to_blocks(const ImageBuffer& gray, Index block);

/// Top-left `height`×`width` window.
ImageBuffer crop(const ImageBuffer& img, Index height, Index width);

/// Samples the padded luminance image with the model's sampling sub-network.
MeasurementFile encode(const Csrn<float>& model, const ImageBuffer& gray);

/// Reconstructs from measurements, crops to the original extents and clamps to [0, 1].
ImageBuffer decode(const Csrn<float>& model, const MeasurementFile& file);

/// decode() without clamping/cropping: the raw (x_i, x_f) of the padded image.
Reconstruction<float> decode_raw(const Csrn<float>& model, const MeasurementFile& file);

/// Clamped, cropped x_f of the in-memory forward pass over the padded image; what
/// decode(encode(img)) must reproduce.
ImageBuffer reconstruct_image(const Csrn<float>& model, const ImageBuffer& gray);

}  // namespace csrn
